"""Random Hermitian systems shared by several test modules."""

from __future__ import annotations

import numpy as np

from qsl.hamiltonians import HermitianOperator
from qsl.hilbert import Basis, QuantumState


def generic_basis(d: int) -> Basis:
    # One d-level site: a basis of any dimension.
    return Basis(1, None, d, np.arange(d, dtype=np.int64))


def random_hermitian(rng: np.random.Generator, d: int, scale: float = 1.0) -> np.ndarray:
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return scale * (a + a.conj().T) / 2


def random_vector(rng: np.random.Generator, d: int) -> np.ndarray:
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)


def random_system(rng: np.random.Generator, d: int, scale: float = 1.0):
    basis = generic_basis(d)
    op = HermitianOperator(basis, random_hermitian(rng, d, scale))
    return op, QuantumState(basis, random_vector(rng, d))


def state_on(sd, weights: dict[int, complex]) -> QuantumState:
    """Superposition of eigenvectors ``{index: coefficient}`` of ``sd``."""
    v = sum(c * sd.eigenvectors[:, n] for n, c in weights.items())
    return QuantumState(sd.basis, v / np.linalg.norm(v))
