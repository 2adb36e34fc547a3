import numpy as np
import pytest

from obsframe import (
    DiagonalizableSystem,
    Operator,
    SamplingFamily,
    Spectrum,
    SystemSpec,
)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_complex_matrix(rng, n, m=None, scale=1.0):
    m = n if m is None else m
    return scale * (rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))) / np.sqrt(2 * n)


def diag_system(mu, b, time, labels=("b",)):
    """Diagonal system with a single sampling vector b."""
    mu = np.atleast_1d(np.asarray(mu, dtype=complex))
    b = np.atleast_1d(np.asarray(b, dtype=complex))
    return SystemSpec(
        DiagonalizableSystem(Spectrum(mu)),
        SamplingFamily((b,), labels),
        time,
    )


def dense_system(a, vectors, time, control=None, labels=None):
    a = np.asarray(a, dtype=complex)
    vectors = tuple(np.asarray(v, dtype=complex) for v in vectors)
    return SystemSpec(Operator(a), SamplingFamily(vectors, labels), time, control)


def standard_basis_family(dim):
    eye = np.eye(dim, dtype=complex)
    return SamplingFamily(tuple(eye[:, i] for i in range(dim)))
