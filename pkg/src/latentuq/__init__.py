"""Local uncertainty quantification from aligned latent spaces of several descriptors."""

__version__ = "0.1.0"

from .affinity import AffinityGraph, DescriptorSet, build_affinity_graph, correspondence_matrix, kernel_width
from .alignment import (
    AlignedEmbedding,
    ManifoldAlignment,
    alignment_energy,
    laplacian_eigenmaps,
    spectral_embed,
)
from .estimator import LatentUncertainty
from .gaussian import LatentGaussian, fit_sample_gaussian, sample_latent
from .pls import PLSModes
from .regression import MultiscaleKernelRidge, direct_std_baseline, uncertainty_map

__all__ = [
    "AffinityGraph",
    "AlignedEmbedding",
    "DescriptorSet",
    "LatentGaussian",
    "LatentUncertainty",
    "ManifoldAlignment",
    "MultiscaleKernelRidge",
    "PLSModes",
    "alignment_energy",
    "build_affinity_graph",
    "correspondence_matrix",
    "direct_std_baseline",
    "fit_sample_gaussian",
    "kernel_width",
    "laplacian_eigenmaps",
    "sample_latent",
    "spectral_embed",
    "uncertainty_map",
]
