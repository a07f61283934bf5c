import numpy as np
import pytest

from enscomp.states import DensityMatrix, Ensemble


def rand_density(rng, dim, dims=None, rank=None) -> DensityMatrix:
    """Ginibre-random density matrix, optionally rank-limited."""
    cols = dim if rank is None else rank
    g = rng.normal(size=(dim, cols)) + 1j * rng.normal(size=(dim, cols))
    m = g @ g.conj().T
    return DensityMatrix(m / np.trace(m).real, dims or (dim,))


def rand_pure_density(rng, dim, dims=None) -> DensityMatrix:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    v /= np.linalg.norm(v)
    return DensityMatrix(np.outer(v, v.conj()), dims or (dim,))


def rand_unitary(rng, dim) -> np.ndarray:
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(g)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def rand_ensemble(rng, dim, count, pure=False) -> Ensemble:
    p = rng.uniform(0.1, 1.0, size=count)
    p /= p.sum()
    maker = rand_pure_density if pure else rand_density
    return Ensemble(p, tuple(maker(rng, dim) for _ in range(count)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
