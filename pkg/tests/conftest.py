import numpy as np
import pytest

from pptmet import DensityMatrix, DimensionSpec


def random_hermitian(rng, d):
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return (g + g.conj().T) / 2


def random_density(rng, dims, rank=None):
    """Haar-ish mixed state with the given dimension structure."""
    dims = DimensionSpec(tuple(dims))
    d = dims.total
    rank = rank or d
    g = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    mat = g @ g.conj().T
    return DensityMatrix(mat / np.trace(mat).real, dims)


def random_pure(rng, dims):
    dims = DimensionSpec(tuple(dims))
    v = rng.standard_normal(dims.total) + 1j * rng.standard_normal(dims.total)
    return DensityMatrix.from_vector(v, dims)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
