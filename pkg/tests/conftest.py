import numpy as np
import pytest
from hypothesis import settings

from latentuq.datasets.population import PopulationParams, generate_population

# property tests draw the same examples on every run
settings.register_profile("deterministic", derandomize=True, deadline=None)
settings.load_profile("deterministic")

ACCEPTANCE = []


def record(number, title, ok, detail=""):
    """Log one acceptance criterion; the summary is printed at the end of the run."""
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d}: {title}" + (f" ({detail})" if detail else "")
    ACCEPTANCE.append((number, line))
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE):
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def small_population():
    return generate_population(PopulationParams(n_subjects=6), seed=7)


@pytest.fixture(scope="session")
def full_population():
    return generate_population(PopulationParams(n_subjects=100), seed=0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def two_view_dataset(K=30, D=6, seed=0, noise=0.05):
    """Two noisy views of one 1-D manifold (a helix-like curve)."""
    rng = np.random.default_rng(seed)
    t = np.sort(rng.uniform(0, 3, K))
    base = np.column_stack([np.cos(t), np.sin(t), t, np.cos(2 * t), np.sin(2 * t), t**2 / 3])[:, :D]
    X1 = base + noise * rng.normal(size=base.shape)
    X2 = base @ rng.normal(size=(D, D)) / np.sqrt(D) + noise * rng.normal(size=base.shape)
    return X1, X2


def run_cli(argv, capsys=None):
    """Run the CLI in-process; returns ``(exit_code, stdout_json or None, stderr_json or None)``."""
    import json

    from latentuq.cli import main

    code = main([str(a) for a in argv])
    if capsys is None:
        return code, None, None
    out, err = capsys.readouterr()
    parse = lambda s: json.loads(s.strip().splitlines()[-1]) if s.strip() else None
    return code, parse(out), parse(err)


SMALL_POP = ["--n-subjects", 12, "--n-rings", 10, "--n-sectors", 12]


@pytest.fixture(scope="session")
def cli_workspace(tmp_path_factory):
    """Shared CLI inputs: a small population, its strain files and two image descriptors."""
    root = tmp_path_factory.mktemp("cli")
    assert run_cli(["gen-population", "--out", root / "pop", "--seed", 3, *SMALL_POP])[0] == 0
    assert run_cli(["strain", "--population", root / "pop", "--out", root / "strain"])[0] == 0
    assert run_cli(["coil-prepare", "--object", "can", "--angles", 0, 20, 40, 60, "--rotations", -2, 0, 2, "--out", root / "coil"])[0] == 0
    return root
