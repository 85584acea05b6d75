import numpy as np
import pytest
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp


def random_symmetric(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Uniform entries in [-1, 1], symmetrized from the upper triangle."""
    m = rng.uniform(-1.0, 1.0, size=(dim, dim))
    return np.triu(m) + np.triu(m, 1).T


@st.composite
def spectral_matrices(draw, max_dim=12):
    """Symmetric matrices Q diag(mu) Q^T with a known number of exact-zero eigenvalues.

    Nonzero eigenvalues have modulus in [1e-2, 10], keeping the problem well posed.
    """
    dim = draw(st.integers(1, max_dim))
    kernel = draw(st.integers(0, dim))
    mags = draw(hnp.arrays(float, dim - kernel, elements=st.floats(1e-2, 10.0)))
    signs = draw(hnp.arrays(bool, dim - kernel))
    mu = np.concatenate([np.where(signs, mags, -mags), np.zeros(kernel)])
    seed = draw(st.integers(0, 2**32 - 1))
    q, _ = np.linalg.qr(np.random.default_rng(seed).standard_normal((dim, dim)))
    return (q * mu) @ q.T, dim - kernel


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
