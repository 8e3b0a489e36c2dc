import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from lastseq.lattices import build_loeliger_code

# the reference link geometry used throughout: M=N=L=2, T=3, R1=8 bpcu
PAPER = dict(M=2, N=2, T=3, L=2, rate_r1=8.0)


@pytest.fixture(scope="session")
def paper_code():
    """Full-scale nested code for the reference 2x2, T=3, L=2 link.

    Built once per test session; the calibration sample count is reduced
    from the library default since its Monte Carlo error (~0.7% here) sits
    far inside every tolerance the tests assert.
    """
    return build_loeliger_code(2, 2, 3, 2, p=29, k=12, seed=42,
                               target_rate_r1=8.0, calib_samples=4000)


@pytest.fixture(scope="session")
def small_code():
    """Dimension-8 code (M=2, N=2, T=2, L=1) for fast exhaustive checks."""
    return build_loeliger_code(2, 2, 2, 1, p=5, k=3, seed=7,
                               target_rate_r1=4.0, calib_samples=4000)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
