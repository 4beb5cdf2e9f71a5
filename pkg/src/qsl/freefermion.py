"""Free-fermion fast path for the open XY chain, analytic Delta E and crossover scans.

With Jordan-Wigner strings ordered by ascending site, a hardcore-boson Fock
state with occupied sites ``i_1 < ... < i_N`` maps to
``c+_{i_1} ... c+_{i_N}|0>`` with sign +1, and nearest-neighbour hopping on
an open chain maps to free hopping. Amplitudes between Fock states are
then determinants of the single-particle propagator
``<s|exp(-iHt)|s0> = det U[occ(s), occ(s0)]``, no extra sign (checked
against exact diagonalization in the tests).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg as sla
from scipy.optimize import bisect

from .dynamics import OverlapSeries, _grid, overlap_from_amplitude
from .hamiltonians import PotentialPattern, grid_bonds
from .hilbert import as_fock, density_wave
from .spectral import SpectralStats, classify_regime, phase_point
from .units import angular_to_mhz, mhz_to_angular

UNITARY_TOL = 1e-10


def occupied_sites(pattern) -> tuple[int, ...]:
    """Sorted occupied sites of a bitstring / occupation tuple (or a site set)."""
    if isinstance(pattern, (set, frozenset)):
        return tuple(sorted(int(i) for i in pattern))
    occ = as_fock(pattern)
    return tuple(i for i, o in enumerate(occ) if o)


@dataclass(frozen=True)
class SingleParticleHamiltonian:
    """Tridiagonal ``h`` with hopping ``J1`` and onsite ``W_i`` (rad/ns)."""

    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        h = np.asarray(self.matrix, dtype=float)
        if h.ndim != 2 or h.shape[0] != h.shape[1]:
            raise ValueError("single-particle Hamiltonian must be square")
        if not np.array_equal(h, h.T):
            raise ValueError("single-particle Hamiltonian must be symmetric")
        if np.any(np.triu(h, 2)):
            raise ValueError("single-particle Hamiltonian must have bandwidth 1")
        h.setflags(write=False)
        object.__setattr__(self, "matrix", h)
        evals, evecs = sla.eigh_tridiagonal(np.diag(h).copy(), np.diag(h, 1).copy())
        object.__setattr__(self, "_eig", (evals, evecs))

    @property
    def num_sites(self) -> int:
        return self.matrix.shape[0]

    @property
    def energies(self) -> np.ndarray:
        return self._eig[0]

    def propagator(self, t: float) -> Propagator:
        return Propagator(float(t), self.propagators([t])[0])

    def propagators(self, t_grid) -> np.ndarray:
        """Stack of ``U(t) = exp(-i h t)``, shape ``(n_t, L, L)``."""
        evals, v = self._eig
        t = np.atleast_1d(np.asarray(t_grid, dtype=float))
        phases = np.exp(-1j * np.outer(t, evals))
        return np.einsum("ak,tk,bk->tab", v, phases, v, optimize=True)

    def many_body_extremes(self, num_particles: int) -> tuple[float, float]:
        """Ground and top energy of the ``N``-particle sector."""
        e = self.energies
        if not 0 <= num_particles <= e.size:
            raise ValueError("particle number out of range")
        return float(e[:num_particles].sum()), float(e[e.size - num_particles:].sum())


def single_particle_hamiltonian(
    num_sites: int, j1_mhz: float, potential: PotentialPattern | None = None
) -> SingleParticleHamiltonian:
    if num_sites < 1:
        raise ValueError("chain needs at least one site")
    if potential is None:
        potential = PotentialPattern.uniform_zero(num_sites)
    if len(potential) != num_sites:
        raise ValueError(f"potential has {len(potential)} sites, chain has {num_sites}")
    j = mhz_to_angular(j1_mhz)
    h = np.diag(potential.values) + j * (np.eye(num_sites, k=1) + np.eye(num_sites, k=-1))
    return SingleParticleHamiltonian(h)


@dataclass(frozen=True)
class Propagator:
    t: float
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        u = self.matrix
        err = np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) if u.size else 0.0
        if err > UNITARY_TOL:
            raise ValueError(f"propagator is not unitary (error {err:.3g})")


def _u(U) -> np.ndarray:
    return U.matrix if isinstance(U, Propagator) else np.asarray(U)


def fock_overlap_amplitude(U, occ_row, occ_col) -> complex:
    """``<row|exp(-iHt)|col>`` as ``det U[row, col]``; 0 for unequal particle numbers."""
    rows, cols = occupied_sites(occ_row), occupied_sites(occ_col)
    if len(rows) != len(cols):
        return 0j
    if not rows:
        return 1 + 0j
    return complex(np.linalg.det(_u(U)[np.ix_(rows, cols)]))


def _normalized(components) -> list[tuple[complex, tuple[int, ...]]]:
    comps = [(complex(c), occupied_sites(s)) for c, s in components]
    if not comps:
        raise ValueError("superposition needs at least one component")
    if len({len(s) for _, s in comps}) != 1:
        raise ValueError("components must share the particle number")
    if len({s for _, s in comps}) != len(comps):
        raise ValueError("duplicate component")
    norm = np.sqrt(sum(abs(c) ** 2 for c, _ in comps))
    if norm == 0:
        raise ValueError("superposition has zero norm")
    return [(c / norm, s) for c, s in comps]


def _cat_amplitudes(u_stack: np.ndarray, comps) -> np.ndarray:
    amp = np.zeros(u_stack.shape[0], dtype=complex)
    for ai, si in comps:
        for aj, sj in comps:
            if si:
                det = np.linalg.det(u_stack[:, si][:, :, sj])
            else:
                det = np.ones(u_stack.shape[0])
            amp += np.conj(ai) * aj * det
    return amp


def cat_overlap(U, components) -> tuple[float, float]:
    """``(F, theta)`` of ``sum_ij conj(a_i) a_j det U[occ_i, occ_j]``."""
    amp = _cat_amplitudes(_u(U)[None], _normalized(components))[0]
    return float(min(abs(amp), 1.0)), float(np.angle(amp))


def chain_overlap_series(
    hsp: SingleParticleHamiltonian, components, t_grid, chunk: int = 256, mapper: Callable | None = None
) -> OverlapSeries:
    """Overlap series of a Fock superposition; ``mapper`` may parallelize over time chunks."""
    comps = _normalized(components)
    t = _grid(t_grid)
    chunks = [t[k:k + chunk] for k in range(0, t.size, chunk)]
    work = lambda tc: _cat_amplitudes(hsp.propagators(tc), comps)  # noqa: E731
    amp = np.concatenate(list((mapper or map)(work, chunks)))
    amp[t == 0] = 1.0  # normalized state
    return overlap_from_amplitude(t, amp)


def hcb_density_matrix(U, occ0) -> np.ndarray:
    """``rho_mn = <a+_m a_n>`` of hardcore bosons evolved from a Fock state.

    ``a+_j = f+_j prod_{b<j} (-1)^{n_b}``: the string flips the rows ``b < j``
    of the evolved orbital matrix ``P = U P0`` and ``f+_j`` prepends the unit
    column ``e_j``, so ``a+_j|psi>`` is the Slater determinant
    ``A_j = [e_j | S_j P]`` and ``<a_i a+_j> = det(A_i^H A_j)``. For ``m != n``,
    ``rho_mn = <a_n a+_m>``; the diagonal is the fermion density.
    """
    u = _u(U)
    L = u.shape[0]
    if not isinstance(occ0, (set, frozenset)) and len(as_fock(occ0)) != L:
        raise ValueError(f"pattern has {len(as_fock(occ0))} sites, propagator has {L}")
    occ = occupied_sites(occ0)
    P = u[:, occ]
    N = len(occ)
    rho = np.zeros((L, L), dtype=complex)
    rho[np.diag_indices(L)] = np.real(np.einsum("ik,ik->i", P, P.conj()))
    if N == 0 or L < 2:
        return rho
    # B[j] = S_j P, rows b < j negated.
    signs = np.where(np.arange(L)[None, :] < np.arange(L)[:, None], -1.0, 1.0)  # (j, b)
    B = signs[:, :, None] * P[None, :, :]
    # (S_i P)^H (S_j P) = P^H P - 2 sum_{i <= b < j} P_b^H P_b, via prefix sums.
    outer = np.einsum("bk,bl->bkl", P.conj(), P)
    C = np.concatenate([np.zeros((1, N, N), dtype=complex), np.cumsum(outer, axis=0)])
    gram = C[-1]
    iu, ju = np.triu_indices(L, 1)
    vals = np.empty(iu.size, dtype=complex)
    step = max(1, 2_000_000 // ((N + 1) ** 2))
    for k in range(0, iu.size, step):
        i, j = iu[k:k + step], ju[k:k + step]
        m = np.zeros((i.size, N + 1, N + 1), dtype=complex)
        m[:, 0, 1:] = B[j, i, :]               # e_i^H S_j P
        m[:, 1:, 0] = np.conj(B[i, j, :])      # (S_i P)^H e_j
        m[:, 1:, 1:] = gram - 2.0 * (C[j] - C[i])
        vals[k:k + step] = np.linalg.det(m)     # <a_i a+_j>
    rho[ju, iu] = vals            # rho_ji = <a_i a+_j>
    rho[iu, ju] = np.conj(vals)
    return rho


def momentum_distribution(rho) -> np.ndarray:
    """``n_k = (1/L) sum_mn exp(ik(m - n)) rho_mn`` for ``k = 2 pi j / L``."""
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError("density matrix must be square")
    scale = max(1.0, float(np.max(np.abs(rho))))
    if np.max(np.abs(rho - rho.conj().T)) > 1e-10 * scale:
        raise ValueError("density matrix is not Hermitian")
    L = rho.shape[0]
    k = 2 * np.pi * np.arange(L) / L
    f = np.exp(1j * np.outer(k, np.arange(L)))  # (k, m)
    nk = np.einsum("km,mn,kn->k", f, rho, f.conj()) / L
    return nk.real


def momentum_series(hsp: SingleParticleHamiltonian, occ0, t_grid, mapper: Callable | None = None) -> np.ndarray:
    """``n_k(t)`` rows for each ``t``."""
    t = _grid(t_grid)
    work = lambda tt: momentum_distribution(hcb_density_matrix(hsp.propagators([tt])[0], occ0))  # noqa: E731
    return np.array(list((mapper or map)(work, t)))


# Energy statistics without a many-body matrix.

def _apply_chain_h(
    comps: Sequence[tuple[complex, tuple[int, ...]]], hsp: SingleParticleHamiltonian
) -> dict[int, complex]:
    h = hsp.matrix
    L = hsp.num_sites
    w = np.diag(h)
    j = float(h[0, 1]) if L > 1 else 0.0
    out: dict[int, complex] = {}
    for c, sites in comps:
        code = sum(1 << s for s in sites)
        out[code] = out.get(code, 0) + c * float(sum(w[s] for s in sites))
        for i in range(L - 1):
            if ((code >> i) & 1) != ((code >> (i + 1)) & 1):
                new = code ^ (0b11 << i)
                out[new] = out.get(new, 0) + c * j
    return out


def chain_stats(hsp: SingleParticleHamiltonian, components) -> SpectralStats:
    """Exact ``E``, ``Delta E``, ``E_min``, ``E_max`` of a Fock superposition."""
    comps = _normalized(components)
    n = len(comps[0][1])
    hpsi = _apply_chain_h(comps, hsp)
    psi = {sum(1 << s for s in sites): c for c, sites in comps}
    e = float(np.real(sum(np.conj(psi[k]) * v for k, v in hpsi.items() if k in psi)))
    h2 = float(sum(abs(v) ** 2 for v in hpsi.values()))
    e_min, e_max = hsp.many_body_extremes(n)
    e = min(max(e, e_min), e_max)
    return SpectralStats(e, float(np.sqrt(max(h2 - e * e, 0.0))), e_min, e_max)


# Analytic Delta E and hop counting.

def pair_counts(nx: int, ny: int, pattern) -> tuple[int, int]:
    """Occupied-empty pairs on nn bonds (``N1``) and on square diagonals (``N2``).

    For any Fock state ``Delta E^2 = J1^2 N1 + J2^2 N2``.
    """
    occ = as_fock(pattern)
    if len(occ) != nx * ny:
        raise ValueError(f"pattern has {len(occ)} sites, grid has {nx * ny}")
    nn, nnn = grid_bonds(nx, ny)
    n1 = sum(occ[a] != occ[b] for a, b in nn)
    n2 = sum(occ[a] != occ[b] for a, b in nnn)
    return int(n1), int(n2)


def analytic_delta_e(geometry: Sequence, j1_mhz: float, j2_mhz: float = 0.0) -> float:
    """Closed-form ``Delta E`` (rad/ns) of the row-major density wave.

    ``geometry`` is ``("chain", L)`` or ``("grid", nx, ny)`` with a square
    grid. On odd grids the row-major ``|1010...>`` is the checkerboard; on
    even grids it is a stripe pattern.
    """
    kind = geometry[0]
    j1, j2 = abs(mhz_to_angular(j1_mhz)), abs(mhz_to_angular(j2_mhz))
    if kind == "chain":
        (L,) = geometry[1:]
        if L < 1:
            raise ValueError("chain needs at least one site")
        return j1 * np.sqrt(L - 1)
    if kind == "grid":
        nx, ny = geometry[1:]
        if nx != ny or nx < 2:
            raise ValueError(f"unsupported geometry {nx}x{ny}: only square grids are covered")
        if nx % 2:
            n = (nx - 1) // 2
            return 2 * j1 * np.sqrt(n * (2 * n + 1))
        n = nx // 2
        return float(np.sqrt(2 * n * (2 * n - 1) * j1**2 + 2 * (2 * n - 1) ** 2 * j2**2))
    raise ValueError(f"unsupported geometry {kind!r}")


# Crossover between MT and the ML / ML* bounds.

def crossover_W(
    stats_at: Callable[[float], SpectralStats],
    w_range: tuple[float, float],
    bound: str = "auto",
    xtol: float = 1e-3,
) -> float:
    """``W*`` (MHz) where ``t_MT = t_ML`` (or ``t_ML*``).

    ``stats_at(W_mhz)`` returns the state statistics. The sign of
    ``t_MT - t_bound`` equals the sign of ``gap - Delta E``. ``bound="auto"``
    picks ML or ML* from the regime at the upper end of the range.
    """
    lo, hi = map(float, w_range)
    if not lo < hi:
        raise ValueError("W range must be increasing")
    if bound == "auto":
        label = classify_regime(stats_at(hi)).label
        if label == "MT":
            raise ValueError("no regime change in range: MT dominates at the upper end")
        bound = label
    if bound not in ("ML", "MLstar"):
        raise ValueError(f"unknown bound {bound!r}")

    def f(w: float) -> float:
        s = stats_at(w)
        gap = s.gap_low if bound == "ML" else s.gap_high
        return gap - s.delta_e

    f_lo, f_hi = f(lo), f(hi)
    if f_lo == 0:
        return lo
    if f_hi == 0:
        return hi
    if np.sign(f_lo) == np.sign(f_hi):
        raise ValueError(f"no sign change of t_MT - t_{bound} on [{lo}, {hi}] MHz")
    return float(bisect(f, lo, hi, xtol=xtol))


@dataclass(frozen=True)
class ScalingRecord:
    geometry: str           # "chain" | "grid"
    size: tuple[int, ...]   # (L,) or (nx, ny)
    delta_e_analytic_mhz: float
    delta_e_numeric_mhz: float
    w_star_mhz: float
    phase_x: float
    phase_y: float

    @property
    def agrees(self) -> bool:
        a, b = self.delta_e_analytic_mhz, self.delta_e_numeric_mhz
        if np.isnan(a) or np.isnan(b):
            return True
        return abs(a - b) <= 1e-8 * max(abs(a), abs(b))


def chain_density_wave_stats(L: int, j1_mhz: float) -> Callable[[float], SpectralStats]:
    comps = [(1.0, density_wave(L))]

    def at(w: float) -> SpectralStats:
        hsp = single_particle_hamiltonian(L, j1_mhz, PotentialPattern.staggered(L, w))
        return chain_stats(hsp, comps)

    return at


def chain_scaling_record(L: int, j1_mhz: float, w_range=(0.0, 20.0)) -> ScalingRecord:
    stats_at = chain_density_wave_stats(L, j1_mhz)
    ana = float(angular_to_mhz(analytic_delta_e(("chain", L), j1_mhz)))
    num = angular_to_mhz(stats_at(0.0).delta_e)
    w_star = crossover_W(stats_at, w_range)
    x, y = phase_point(stats_at(w_star))
    return ScalingRecord("chain", (L,), ana, num, w_star, x, y)


def _grid_stats_at(n: int, j1_mhz: float, j2_mhz: float) -> Callable[[float], SpectralStats]:
    from scipy.sparse.linalg import eigsh

    from .hamiltonians import lattice_2d
    from .hilbert import make_product_state
    from .spectral import quadratic_form_moments

    pattern = density_wave(n * n)
    n_exc = sum(pattern)

    def at(w: float) -> SpectralStats:
        op = lattice_2d(n, n, n_exc, j1_mhz, j2_mhz, PotentialPattern.staggered(n * n, w), sparse=True)
        psi = make_product_state(op.basis, pattern)
        e, de = quadratic_form_moments(op, psi)
        if op.dimension <= 4000:
            ev = sla.eigvalsh(op.dense())
            lo, hi = ev[0], ev[-1]
        else:
            m = op.sparse()
            lo = eigsh(m, k=1, which="SA", return_eigenvectors=False)[0]
            hi = eigsh(m, k=1, which="LA", return_eigenvectors=False)[0]
        return SpectralStats(min(max(e, lo), hi), de, float(lo), float(hi))

    return at


def grid_scaling_record(
    n: int, j1_mhz: float, j2_mhz: float, w_range=(0.0, 20.0), cap: int = 200_000
) -> ScalingRecord:
    """Square ``n x n`` grid, row-major density wave, ``W_i = (-1)^i W``.

    Numerical entries are NaN when the sector exceeds ``cap``.
    """
    from math import comb

    ana = float(angular_to_mhz(analytic_delta_e(("grid", n, n), j1_mhz, j2_mhz)))
    if comb(n * n, (n * n + 1) // 2) > cap:
        return ScalingRecord("grid", (n, n), ana, np.nan, np.nan, np.nan, np.nan)
    stats_at = _grid_stats_at(n, j1_mhz, j2_mhz)
    num = float(angular_to_mhz(stats_at(0.0).delta_e))
    w_star = crossover_W(stats_at, w_range)
    x, y = phase_point(stats_at(w_star))
    return ScalingRecord("grid", (n, n), ana, num, w_star, x, y)
