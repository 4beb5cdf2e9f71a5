"""Exact unitary evolution in the eigenbasis, overlaps and Fock-space spreading."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import bisect

from .hilbert import QuantumState, basis_hamming_distances
from .spectral import SpectralData, StateSpectrum, _check_basis, _resolve

DEFAULT_EPS = 1e-3
REFINE_XTOL = 1e-3


@dataclass(frozen=True)
class OverlapSeries:
    """``F(t) = |<psi(0)|psi(t)>|`` and its principal phase on a time grid (ns)."""

    t: np.ndarray = field(repr=False)
    F: np.ndarray = field(repr=False)
    theta: np.ndarray | None = field(default=None, repr=False)
    # Kept so crossings can be refined between grid points.
    spectrum: StateSpectrum | None = field(default=None, repr=False, compare=False)

    def __len__(self) -> int:
        return self.t.size

    def with_overlap(self, F) -> OverlapSeries:
        return OverlapSeries(self.t, np.asarray(F, dtype=float), self.theta, None)


def _grid(t_grid) -> np.ndarray:
    t = np.atleast_1d(np.asarray(t_grid, dtype=float))
    if t.size == 0 or np.any(np.diff(t) <= 0):
        raise ValueError("time grid must be nonempty and strictly ascending")
    return t


def overlap_from_amplitude(t: np.ndarray, amp: np.ndarray, spectrum=None) -> OverlapSeries:
    F = np.clip(np.abs(amp), 0.0, 1.0)
    return OverlapSeries(t, F, np.angle(amp), spectrum)


def evolve_overlap(sd, psi0: QuantumState | None, t_grid) -> OverlapSeries:
    """``<psi0|psi(t)> = sum_n |c_n|^2 exp(-i E_n t)``."""
    spec = _resolve(sd, psi0)
    t = _grid(t_grid)
    return overlap_from_amplitude(t, spec.overlap(t), spec)


def evolve_state(sd: SpectralData, psi0: QuantumState, t: float) -> QuantumState:
    c = sd.coefficients(psi0)
    if t == 0:
        return psi0
    amps = sd.eigenvectors @ (np.exp(-1j * sd.eigenvalues * t) * c)
    # Renormalize away rounding so the result passes the state invariant.
    return QuantumState(psi0.basis, amps / np.linalg.norm(amps))


def evolve_amplitudes(sd: SpectralData, psi0: QuantumState, t_grid) -> np.ndarray:
    """Rows are ``psi(t)`` in the Fock basis for each ``t``."""
    t = _grid(t_grid)
    c = sd.coefficients(psi0)
    return (np.exp(-1j * np.outer(t, sd.eigenvalues)) * c[None, :]) @ sd.eigenvectors.T


@dataclass(frozen=True)
class HammingDistribution:
    t: np.ndarray = field(repr=False)
    probabilities: np.ndarray = field(repr=False)  # (n_t, d_max + 1)

    @property
    def d_max(self) -> int:
        return self.probabilities.shape[1] - 1

    def tail(self, d_above: int) -> np.ndarray:
        """``sum_{d > d_above} Pi(d, t)`` for each t."""
        return self.probabilities[:, d_above + 1:].sum(axis=1)


def hamming_distribution(sd: SpectralData, psi0: QuantumState, t_grid) -> HammingDistribution:
    """Probability ``Pi(d, t)`` of sitting at Hamming distance ``d`` from ``|s0>``."""
    _check_basis(sd.basis, psi0)
    i0 = psi0.single_fock_index()
    if i0 is None:
        raise ValueError("the Hamming distribution needs a single Fock initial state")
    basis = sd.basis
    dist = basis_hamming_distances(basis, basis.decode(basis.states[i0]))
    if basis.num_excitations is not None:
        d_max = 2 * min(basis.num_excitations, basis.num_sites - basis.num_excitations)
    else:
        d_max = int(dist.max())
    t = _grid(t_grid)
    onehot = np.zeros((basis.dimension, d_max + 1))
    onehot[np.arange(basis.dimension), dist] = 1.0
    probs = np.empty((t.size, d_max + 1))
    chunk = max(1, 4_000_000 // basis.dimension)
    for k in range(0, t.size, chunk):
        amps = evolve_amplitudes(sd, psi0, t[k:k + chunk])
        probs[k:k + chunk] = (np.abs(amps) ** 2) @ onehot
    return HammingDistribution(t, probs)


def detect_orthogonalization(series: OverlapSeries, eps: float = DEFAULT_EPS) -> float | None:
    """First time with ``F <= eps``, refined between grid points to 1e-3 ns.

    The refined value is the crossing of ``eps``, not the zero of ``F``.
    Without an attached spectrum the crossing is linearly interpolated.
    """
    if not 0 < eps <= 0.1:
        raise ValueError("eps must lie in (0, 0.1]")
    below = np.flatnonzero(series.F <= eps)
    if below.size == 0:
        return None
    k = int(below[0])
    if k == 0:
        return float(series.t[0])
    t0, t1 = float(series.t[k - 1]), float(series.t[k])
    if series.spectrum is not None:
        spec = series.spectrum
        f = lambda tt: abs(spec.overlap(tt)[0]) - eps  # noqa: E731
        if f(t1) > 0:  # grid value and recomputation disagree at rounding level
            return t1
        return float(bisect(f, t0, t1, xtol=REFINE_XTOL))
    f0, f1 = series.F[k - 1], series.F[k]
    return float(t0 + (f0 - eps) / (f0 - f1) * (t1 - t0))


@dataclass(frozen=True)
class Violation:
    t: float
    F: float
    bound: float
    excess: float
    side: str  # "lower" | "upper"


def verify_sandwich(series: OverlapSeries, lower, upper, tol: float = 1e-9) -> list[Violation]:
    """Grid points where ``F`` escapes ``[lower - tol, upper + tol]``."""
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if lower.shape != series.F.shape or upper.shape != series.F.shape:
        raise ValueError("envelopes are not sampled on the overlap grid")
    out = []
    lo_ex = lower - series.F
    up_ex = series.F - upper
    for k in np.flatnonzero(lo_ex > tol):
        out.append(Violation(float(series.t[k]), float(series.F[k]), float(lower[k]), float(lo_ex[k]), "lower"))
    for k in np.flatnonzero(up_ex > tol):
        out.append(Violation(float(series.t[k]), float(series.F[k]), float(upper[k]), float(up_ex[k]), "upper"))
    out.sort(key=lambda v: v.t)
    return out
