"""Three-stage local uncertainty estimation.

1. Align the latent spaces of ``M`` descriptors (:class:`ManifoldAlignment`).
2. For every subject, fit a Gaussian to its ``M`` latent points and draw
   ``n_draws`` new points.
3. Reconstruct the reference descriptor at the drawn points with
   :class:`MultiscaleKernelRidge` (trained on the reference descriptor's own
   latent coordinates) and take the dimension-wise standard deviation.
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._utils import derive_seed
from .affinity import DescriptorSet
from .alignment import ManifoldAlignment
from .gaussian import DEFAULT_DRAWS, fit_sample_gaussian, sample_latent
from .regression import MultiscaleKernelRidge, direct_std_baseline, uncertainty_map


class LatentUncertainty(BaseEstimator):
    """Per-subject uncertainty maps on a reference descriptor.

    Parameters
    ----------
    mu, k_sigma, k_M, n_components
        Forwarded to :class:`ManifoldAlignment`.
    n_draws : int, default=100
        Latent points sampled per subject.
    n_levels, ridge
        Forwarded to :class:`MultiscaleKernelRidge`.
    reference : int or str, default=0
        Descriptor to reconstruct (index or name).
    random_state : int, default=0
        Root seed. Subject ``s`` samples with ``derive_seed(random_state,
        "latent", s)``, so results do not depend on processing order.

    Attributes
    ----------
    alignment_ : ManifoldAlignment
    regressor_ : MultiscaleKernelRidge
    gaussians_ : list of LatentGaussian
    latent_samples_ : ndarray of shape (n_subjects, n_draws, n_components)
    uncertainty_ : ndarray of shape (n_subjects, n_features)
    baseline_ : ndarray of shape (n_subjects, n_features)
        Direct standard deviation across the raw descriptors.
    """

    def __init__(
        self,
        mu=1.0,
        k_sigma=10,
        k_M=10,
        n_components=2,
        n_draws=DEFAULT_DRAWS,
        n_levels=4,
        ridge=1e-3,
        reference=0,
        random_state=0,
    ):
        self.mu = mu
        self.k_sigma = k_sigma
        self.k_M = k_M
        self.n_components = n_components
        self.n_draws = n_draws
        self.n_levels = n_levels
        self.ridge = ridge
        self.reference = reference
        self.random_state = random_state

    def _reference_index(self, descriptors):
        if isinstance(self.reference, str):
            return descriptors.index(self.reference)
        ref = int(self.reference)
        if not 0 <= ref < descriptors.n_descriptors:
            raise ValueError(f"reference index {ref} out of range")
        return ref

    def fit(self, X, y=None, sample_ids=None):
        descriptors = X if isinstance(X, DescriptorSet) else DescriptorSet(list(X), sample_ids=sample_ids)
        if descriptors.n_descriptors < 2:
            raise ValueError("uncertainty estimation needs at least two descriptors")
        ref = self._reference_index(descriptors)
        self.alignment_ = ManifoldAlignment(
            mu=self.mu, k_sigma=self.k_sigma, k_M=self.k_M, n_components=self.n_components
        ).fit(descriptors)
        Z = self.alignment_.embedding_.Z
        self.regressor_ = MultiscaleKernelRidge(n_levels=self.n_levels, ridge=self.ridge).fit(
            Z[ref], descriptors.descriptors[ref]
        )
        K = descriptors.n_samples
        gaussians, draws, maps, baseline = [], [], [], []
        for i, sid in enumerate(descriptors.sample_ids):
            points = np.stack([z[i] for z in Z])
            g = fit_sample_gaussian(points, sample_id=sid)
            samples = sample_latent(g, self.n_draws, derive_seed(self.random_state, "latent", sid))
            gaussians.append(g)
            draws.append(samples)
            maps.append(uncertainty_map(self.regressor_, samples))
            baseline.append(direct_std_baseline(np.stack([X_m[i] for X_m in descriptors.descriptors])))
        self.descriptors_ = descriptors
        self.reference_index_ = ref
        self.gaussians_ = gaussians
        self.latent_samples_ = np.stack(draws) if K else np.empty((0, self.n_draws, self.n_components))
        self.uncertainty_ = np.stack(maps)
        self.baseline_ = np.stack(baseline)
        return self

    def fit_transform(self, X, y=None, sample_ids=None):
        return self.fit(X, sample_ids=sample_ids).uncertainty_

    @property
    def mean_uncertainty_(self):
        check_is_fitted(self, "uncertainty_")
        return self.uncertainty_.mean(axis=0)
