"""Eigendecomposition, spectral statistics of a state, regimes and phase diagram."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.linalg import lapack

from .hamiltonians import HERMITIAN_TOL, HermitianOperator
from .hilbert import Basis, QuantumState

REGIME_REL_TOL = 1e-9
# Above this dimension only the state-resolved spectrum is computed.
DENSE_EIGH_LIMIT = 4000


@dataclass(frozen=True)
class StateSpectrum:
    """Spectral measure of one state: eigenvalues carrying weight ``|c_n|^2``.

    ``e_min``/``e_max`` are the extremes of the full spectrum, which need not
    carry weight.
    """

    energies: np.ndarray
    weights: np.ndarray
    e_min: float
    e_max: float
    basis: Basis | None = field(default=None, repr=False, compare=False)

    def overlap(self, t) -> np.ndarray:
        """``<psi|exp(-iHt)|psi>`` on an array of times."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty(t.size, dtype=complex)
        chunk = max(1, 2_000_000 // max(1, self.energies.size))
        for k in range(0, t.size, chunk):
            out[k:k + chunk] = np.exp(-1j * np.outer(t[k:k + chunk], self.energies)) @ self.weights
        # The state is normalized, so the t = 0 value is exactly 1.
        out[t == 0] = 1.0
        return out


@dataclass(frozen=True)
class SpectralData:
    """Full eigendecomposition: ascending eigenvalues and eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray = field(repr=False)
    basis: Basis = field(repr=False)

    @property
    def e_min(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def e_max(self) -> float:
        return float(self.eigenvalues[-1])

    def coefficients(self, psi: QuantumState) -> np.ndarray:
        _check_basis(self.basis, psi)
        return self.eigenvectors.conj().T @ psi.amplitudes

    def state_spectrum(self, psi: QuantumState) -> StateSpectrum:
        c = self.coefficients(psi)
        return StateSpectrum(self.eigenvalues, np.abs(c) ** 2, self.e_min, self.e_max, self.basis)


def _check_basis(basis: Basis, psi: QuantumState) -> None:
    if psi.basis is not basis and (
        psi.basis.dimension != basis.dimension
        or psi.basis.num_sites != basis.num_sites
        or psi.basis.num_excitations != basis.num_excitations
        or psi.basis.levels != basis.levels
    ):
        raise ValueError("state and operator live in different bases")


def diagonalize(op: HermitianOperator) -> SpectralData:
    if op.hermiticity_error() > HERMITIAN_TOL * max(1.0, op.max_abs()):
        raise ValueError("operator is not Hermitian")
    evals, evecs = sla.eigh(op.dense(), check_finite=False)
    return SpectralData(evals, evecs, op.basis)


def _resolve(sd, psi) -> StateSpectrum:
    if isinstance(sd, StateSpectrum):
        return sd
    if psi is None:
        raise ValueError("a state is required alongside SpectralData")
    return sd.state_spectrum(psi)


def tridiagonal_state_spectrum(op: HermitianOperator, psi: QuantumState) -> StateSpectrum:
    """Exact spectral measure of ``psi`` without forming eigenvectors of ``op``.

    ``op`` is conjugated by a Householder reflector mapping ``psi`` onto the
    first unit vector, then reduced to tridiagonal form with LAPACK
    ``?sytrd``/``?hetrd``, which leaves that unit vector fixed. The weights
    of ``psi`` are the squared first components of the tridiagonal
    eigenvectors; the eigenvalues of the full tridiagonal matrix give the
    spectral extremes. Cost is one dense reduction, about a third of a full
    ``eigh`` with vectors.
    """
    _check_basis(op.basis, psi)
    x = psi.amplitudes
    use_complex = not op.is_real or np.any(np.abs(x.imag) > 0)
    dtype = complex if use_complex else float
    x = x.astype(dtype) if use_complex else x.real.copy()
    n = x.size
    if n == 1:
        e = float(np.real(op.dense()[0, 0]))
        return StateSpectrum(np.array([e]), np.array([1.0]), e, e, op.basis)

    a = np.asfortranarray(op.dense(order="F"), dtype=dtype)

    # Reflector P = I - 2 u u^H with P x proportional to e_1.
    phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0
    u = x.copy()
    u[0] += phase * np.linalg.norm(x)
    u /= np.linalg.norm(u)
    v = a @ u
    c = np.vdot(u, v)
    z = 2.0 * v - 2.0 * c * u
    block = 1024
    for k in range(0, n, block):
        s = slice(k, k + block)
        a[:, s] -= np.outer(u, z[s].conj()) + np.outer(z, u[s].conj())

    prefix = "he" if use_complex else "sy"
    trd, trd_lwork = lapack.get_lapack_funcs((prefix + "trd", prefix + "trd_lwork"), (a,))
    lwork, info = trd_lwork(n, lower=1)
    if info != 0:
        raise RuntimeError(f"{prefix}trd workspace query failed (info={info})")
    _, d, off, _, info = trd(a, lower=1, lwork=int(lwork.real), overwrite_a=1)
    if info != 0:
        raise RuntimeError(f"{prefix}trd failed (info={info})")
    del a
    d = np.asarray(d, dtype=float)
    off = np.asarray(off, dtype=float)

    all_evals = sla.eigvalsh_tridiagonal(d, off)
    norm = np.max(np.abs(d)) + 2.0 * np.max(np.abs(off))
    split = np.flatnonzero(np.abs(off) <= 1e-13 * norm)
    m = int(split[0]) + 1 if split.size else n
    if m == 1:
        evals, z0 = d[:1], np.ones(1)
    else:
        try:
            evals, vecs = sla.eigh_tridiagonal(d[:m], off[: m - 1], lapack_driver="stemr")
        except np.linalg.LinAlgError:
            evals, vecs = sla.eigh_tridiagonal(d[:m], off[: m - 1], lapack_driver="stev")
        z0 = vecs[0]
    return StateSpectrum(
        evals, z0**2, float(all_evals[0]), float(all_evals[-1]), op.basis
    )


def _compose(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Index map of ``g_p g_q``."""
    return p[q]


def find_symmetries(op: HermitianOperator, psi: QuantumState, candidates) -> list[np.ndarray]:
    """Independent commuting involutions among ``candidates`` that commute with ``op``
    and map ``psi`` to ``+psi`` or ``-psi``."""
    _check_basis(op.basis, psi)
    h = op.sparse()
    scale = max(1.0, op.max_abs())
    x = psi.amplitudes
    ident = np.arange(op.dimension)
    group = {ident.tobytes(): ident}
    gens: list[np.ndarray] = []
    for p in candidates:
        p = np.asarray(p)
        if p.tobytes() in group or not np.array_equal(p[p], ident):
            continue
        if abs(abs(np.vdot(x, x[p])) - 1.0) > 1e-10:
            continue
        if any(not np.array_equal(p[g], g[p]) for g in gens):
            continue
        diff = h[p][:, p] - h
        if diff.nnz and abs(diff).max() > HERMITIAN_TOL * scale:
            continue
        gens.append(p)
        for g in list(group.values()):
            c = _compose(p, g)
            group[c.tobytes()] = c
    return gens


@dataclass(frozen=True)
class SymmetrySector:
    """Isometry onto the joint eigenspace with the given generator signs."""

    signs: tuple[int, ...]
    isometry: sp.csr_matrix = field(repr=False)

    @property
    def dimension(self) -> int:
        return self.isometry.shape[1]


def symmetry_sectors(dimension: int, generators: list[np.ndarray]) -> list[SymmetrySector]:
    """Split the space by the characters of the group generated by commuting involutions.

    For orbit representative ``r`` and signs ``chi`` the sector vector is
    ``sum_g chi(g) g|r>``, normalized; it vanishes when ``r`` is fixed by an
    element with ``chi(g) = -1``.
    """
    k = len(generators)
    elems = [np.arange(dimension)]
    subsets = [()]
    for i, p in enumerate(generators):
        elems += [_compose(p, g) for g in elems]
        subsets += [s + (i,) for s in subsets]
    G = np.array(elems)
    reps = np.unique(G.min(axis=0))
    col = np.arange(reps.size)
    sectors = []
    for mask in range(2**k):
        signs = tuple(-1 if (mask >> i) & 1 else 1 for i in range(k))
        chi = np.array([np.prod([signs[i] for i in s]) if s else 1 for s in subsets], dtype=float)
        rows = G[:, reps].ravel()
        cols = np.tile(col, len(elems))
        vals = np.repeat(chi, reps.size)
        v = sp.coo_matrix((vals, (rows, cols)), shape=(dimension, reps.size)).tocsc()
        v.sum_duplicates()
        norms = np.sqrt(np.asarray(v.multiply(v).sum(axis=0)).ravel())
        keep = np.flatnonzero(norms > 0.5)
        v = v[:, keep] @ sp.diags(1.0 / norms[keep])
        sectors.append(SymmetrySector(signs, sp.csr_matrix(v)))
    if sum(s.dimension for s in sectors) != dimension:
        raise RuntimeError("symmetry sectors do not span the space")
    return sectors


def symmetry_reduced_spectrum(op: HermitianOperator, psi: QuantumState, generators) -> StateSpectrum:
    """Exact spectral measure from dense diagonalization of each symmetry block.

    ``psi`` lives in one block, which is diagonalized with vectors; the other
    blocks only contribute to the spectral extremes.
    """
    _check_basis(op.basis, psi)
    x = psi.amplitudes
    own = tuple(int(round(np.real(np.vdot(x, x[p])))) for p in generators)
    h = op.sparse()
    e_min, e_max = np.inf, -np.inf
    spec = None
    for sec in symmetry_sectors(op.dimension, list(generators)):
        if sec.dimension == 0:
            continue
        v = sec.isometry
        hs = (v.T @ h @ v).toarray()
        hs = 0.5 * (hs + hs.conj().T)
        if sec.signs == own:
            evals, evecs = sla.eigh(hs, check_finite=False)
            c = evecs.conj().T @ (v.T @ x)
            spec = (evals, np.abs(c) ** 2)
        else:
            evals = sla.eigvalsh(hs, check_finite=False)
        e_min, e_max = min(e_min, evals[0]), max(e_max, evals[-1])
    if spec is None:
        raise RuntimeError("state does not lie in a symmetry sector")
    return StateSpectrum(spec[0], spec[1], float(e_min), float(e_max), op.basis)


def state_spectrum(
    op: HermitianOperator, psi: QuantumState, method: str = "auto", symmetries=None
) -> StateSpectrum:
    """Spectral measure of ``psi``.

    ``auto`` uses a dense ``eigh`` for small spaces, otherwise a symmetry
    reduction when the candidate maps in ``symmetries`` shrink the largest
    block below the dense limit, otherwise the tridiagonal reduction.
    """
    if method == "auto":
        if op.dimension <= DENSE_EIGH_LIMIT:
            method = "eigh"
        else:
            gens = find_symmetries(op, psi, symmetries or [])
            if gens and op.dimension / 2 ** len(gens) <= DENSE_EIGH_LIMIT:
                return symmetry_reduced_spectrum(op, psi, gens)
            method = "tridiagonal"
    if method == "eigh":
        return diagonalize(op).state_spectrum(psi)
    if method == "tridiagonal":
        return tridiagonal_state_spectrum(op, psi)
    if method == "symmetry":
        return symmetry_reduced_spectrum(op, psi, find_symmetries(op, psi, symmetries or []))
    raise ValueError(f"unknown method {method!r}")


@dataclass(frozen=True)
class SpectralStats:
    """Mean energy, spread and spectral extremes (rad/ns)."""

    energy: float
    delta_e: float
    e_min: float
    e_max: float

    @property
    def gap_low(self) -> float:
        """``E - E_min``."""
        return self.energy - self.e_min

    @property
    def gap_high(self) -> float:
        """``E_max - E``."""
        return self.e_max - self.energy

    @property
    def width(self) -> float:
        return self.e_max - self.e_min

    def shifted(self, c: float) -> SpectralStats:
        return SpectralStats(self.energy + c, self.delta_e, self.e_min + c, self.e_max + c)


def spectral_stats(sd, psi: QuantumState | None = None) -> SpectralStats:
    """Stats of ``psi`` from a :class:`SpectralData` (or a ready :class:`StateSpectrum`)."""
    spec = _resolve(sd, psi)
    w = spec.weights
    energy = float(w @ spec.energies)
    var = float(w @ (spec.energies - energy) ** 2)
    energy = min(max(energy, spec.e_min), spec.e_max)
    return SpectralStats(energy, float(np.sqrt(max(var, 0.0))), spec.e_min, spec.e_max)


def quadratic_form_moments(op: HermitianOperator, psi: QuantumState) -> tuple[float, float]:
    """``(<H>, Delta E)`` straight from ``<psi|H|psi>`` and ``||H psi||^2``."""
    x = psi.amplitudes
    hx = op @ x
    e = float(np.real(np.vdot(x, hx)))
    h2 = float(np.real(np.vdot(hx, hx)))
    return e, float(np.sqrt(max(h2 - e * e, 0.0)))


def fractional_moments(sd, psi: QuantumState | None, alphas) -> tuple[np.ndarray, np.ndarray]:
    """Raw moments ``<(H - E_min)^a>`` and ``<(E_max - H)^a>`` for each ``a``."""
    spec = _resolve(sd, psi)
    alphas = np.atleast_1d(np.asarray(alphas, dtype=float))
    if np.any(alphas <= 0):
        raise ValueError("alpha must be positive")
    up = np.clip(spec.energies - spec.e_min, 0.0, None)
    down = np.clip(spec.e_max - spec.energies, 0.0, None)
    low = np.array([spec.weights @ up**a for a in alphas])
    high = np.array([spec.weights @ down**a for a in alphas])
    return low, high


def moment_alpha(sd, psi: QuantumState | None, alpha: float) -> tuple[float, float]:
    """``(E_alpha, E*_alpha)``, the L^alpha norms of ``H - E_min`` and ``E_max - H``."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    low, high = fractional_moments(sd, psi, [alpha])
    return float(low[0] ** (1.0 / alpha)), float(high[0] ** (1.0 / alpha))


def _close(a: float, b: float, rel: float = REGIME_REL_TOL) -> bool:
    return abs(a - b) <= rel * max(abs(a), abs(b))


@dataclass(frozen=True)
class Regime:
    """Which orthogonalization bound dominates, plus boundary flags."""

    label: str
    mt_ml: bool = False
    mt_mlstar: bool = False
    ml_mlstar: bool = False

    @property
    def on_boundary(self) -> bool:
        return self.mt_ml or self.mt_mlstar or self.ml_mlstar


def classify_regime(stats: SpectralStats) -> Regime:
    if not stats.width > 0:
        raise ValueError("regime undefined for a single-point spectrum (E_max == E_min)")
    de, lo, hi = stats.delta_e, stats.gap_low, stats.gap_high
    if de < min(lo, hi):
        label = "MT"
    elif lo < hi:
        label = "ML"
    else:
        label = "MLstar"
    return Regime(label, _close(de, lo), _close(de, hi), _close(lo, hi))


def phase_point(stats: SpectralStats) -> tuple[float, float]:
    """Normalized phase-diagram coordinates ``(x, y)``."""
    if not stats.width > 0:
        raise ValueError("phase diagram undefined for zero spectral width")
    return stats.gap_low / stats.width, stats.delta_e / stats.width


def bhatia_davis_gap(stats: SpectralStats) -> float:
    """``(E_max - E)(E - E_min) - Delta E^2`` from the moments."""
    return stats.gap_high * stats.gap_low - stats.delta_e**2


def mt_blockage_check(psi: QuantumState | None, sd, rel_tol: float = 1e-10) -> tuple[float, bool]:
    """Distance ``D`` to the Bhatia-Davis boundary and whether it saturates.

    ``D`` is evaluated as ``sum_n |c_n|^2 (E_n - E_min)(E_max - E_n)``, which
    equals the moment form identically and vanishes exactly when the state
    only has weight on the two extreme eigenspaces.
    """
    spec = _resolve(sd, psi)
    up = np.clip(spec.energies - spec.e_min, 0.0, None)
    down = np.clip(spec.e_max - spec.energies, 0.0, None)
    d = float(spec.weights @ (up * down))
    width = spec.e_max - spec.e_min
    return d, d < rel_tol * width**2
