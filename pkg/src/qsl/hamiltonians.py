"""Hamiltonian builders for the driven qubit/qutrit and hardcore-boson lattices.

All builders take linear-frequency MHz and return operators in rad/ns.
Lattices use open boundaries; 2d sites are indexed row-major,
``i = iy * nx + ix``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .hilbert import (
    DEFAULT_DIMENSION_CAP,
    Basis,
    as_fock,
    build_full_basis,
    build_sector_basis,
)
from .units import angular_to_mhz, mhz_to_angular

HERMITIAN_TOL = 1e-12


@dataclass(frozen=True)
class HermitianOperator:
    """Hermitian matrix in a declared basis, energies in rad/ns.

    ``matrix`` is a dense ndarray, or a CSR matrix for sectors too large to
    keep densely (the dense form is then built on demand). Real symmetric
    matrices are kept real.
    """

    basis: Basis
    matrix: np.ndarray | sp.csr_matrix = field(repr=False)
    unit: str = "rad/ns"

    def __post_init__(self):
        n = self.basis.dimension
        if self.matrix.shape != (n, n):
            raise ValueError(f"matrix shape {self.matrix.shape} does not match basis dimension {n}")
        if self.hermiticity_error() > HERMITIAN_TOL * max(1.0, self.max_abs()):
            raise ValueError("matrix is not Hermitian")
        if not sp.issparse(self.matrix):
            self.matrix.setflags(write=False)

    @property
    def dimension(self) -> int:
        return self.basis.dimension

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.matrix)

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.matrix)

    def max_abs(self) -> float:
        if self.is_sparse:
            return float(abs(self.matrix).max()) if self.matrix.nnz else 0.0
        return float(np.max(np.abs(self.matrix))) if self.matrix.size else 0.0

    def hermiticity_error(self) -> float:
        diff = self.matrix - self.matrix.conj().T
        if sp.issparse(diff):
            return float(abs(diff).max()) if diff.nnz else 0.0
        return float(np.max(np.abs(diff))) if diff.size else 0.0

    def dense(self, order: str = "C") -> np.ndarray:
        if self.is_sparse:
            return self.matrix.toarray(order=order)
        return np.array(self.matrix, order=order)

    def sparse(self) -> sp.csr_matrix:
        return self.matrix if self.is_sparse else sp.csr_matrix(self.matrix)

    def diagonal(self) -> np.ndarray:
        return np.real(self.matrix.diagonal())

    def __matmul__(self, vec):
        return self.matrix @ vec


@dataclass(frozen=True)
class PotentialPattern:
    """Per-site onsite energies in rad/ns."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or not np.all(np.isfinite(v)):
            raise ValueError("potential must be a finite 1d array")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.values.size

    @classmethod
    def from_mhz(cls, values_mhz: Sequence[float]) -> PotentialPattern:
        return cls(mhz_to_angular(np.asarray(values_mhz, dtype=float)))

    def to_mhz(self) -> np.ndarray:
        return angular_to_mhz(self.values)

    @classmethod
    def uniform_zero(cls, num_sites: int) -> PotentialPattern:
        return cls(np.zeros(num_sites))

    @classmethod
    def staggered(cls, num_sites: int, w_mhz: float) -> PotentialPattern:
        """``W_i = (-1)^i W``; site 0 carries ``+W``."""
        signs = (-1.0) ** np.arange(num_sites)
        return cls.from_mhz(signs * w_mhz)

    @classmethod
    def checkerboard(cls, nx: int, ny: int, w_mhz: float) -> PotentialPattern:
        """``W_i = (-1)^(ix + iy) W`` on a row-major grid."""
        i = np.arange(nx * ny)
        signs = (-1.0) ** (i % nx + i // nx)
        return cls.from_mhz(signs * w_mhz)


def driven_qubit(omega_mhz: float, delta_mhz: float) -> HermitianOperator:
    """Rotating-frame driven qubit ``[[0, Omega], [Omega, Delta]]``."""
    om, de = mhz_to_angular(omega_mhz), mhz_to_angular(delta_mhz)
    h = np.array([[0.0, om], [om, de]])
    return HermitianOperator(build_full_basis(1, 2), h)


def driven_qutrit(omega_mhz: float, eta_mhz: float) -> HermitianOperator:
    """Rotating-frame driven transmon truncated to three levels."""
    om, eta = mhz_to_angular(omega_mhz), mhz_to_angular(eta_mhz)
    r2 = np.sqrt(2.0) * om
    h = np.array([[0.0, om, 0.0], [om, 0.0, r2], [0.0, r2, eta]])
    return HermitianOperator(build_full_basis(1, 3), h)


def chain_bonds(num_sites: int) -> list[tuple[int, int]]:
    return [(i, i + 1) for i in range(num_sites - 1)]


def grid_bonds(nx: int, ny: int) -> tuple[list[tuple[int, int]], list[tuple[int, int]]]:
    """Nearest-neighbour edges and the two diagonals of each unit square."""
    site = lambda ix, iy: iy * nx + ix  # noqa: E731
    nn = []
    for iy in range(ny):
        for ix in range(nx):
            if ix + 1 < nx:
                nn.append((site(ix, iy), site(ix + 1, iy)))
            if iy + 1 < ny:
                nn.append((site(ix, iy), site(ix, iy + 1)))
    nnn = []
    for iy in range(ny - 1):
        for ix in range(nx - 1):
            nnn.append((site(ix, iy), site(ix + 1, iy + 1)))
            nnn.append((site(ix + 1, iy), site(ix, iy + 1)))
    return nn, nnn


def grid_symmetry_candidates(nx: int, ny: int) -> list[tuple[np.ndarray, bool]]:
    """Mirror maps of an open grid (a chain is ``ny = 1``), each with and without particle-hole flip."""
    ix, iy = np.arange(nx * ny) % nx, np.arange(nx * ny) // nx
    maps = []
    if nx > 1:
        maps.append(iy * nx + (nx - 1 - ix))
    if ny > 1:
        maps.append((ny - 1 - iy) * nx + ix)
    if nx > 1 and ny > 1:
        maps.append((ny - 1 - iy) * nx + (nx - 1 - ix))
    if nx == ny > 1:
        maps.append(ix * nx + iy)
        maps.append((nx - 1 - ix) * nx + (nx - 1 - iy))
    out = [(np.arange(nx * ny), True)]
    for m in maps:
        out += [(m, False), (m, True)]
    return out


def hopping_operator(
    basis: Basis,
    bonds: Sequence[tuple[tuple[int, int], float]],
    potential: PotentialPattern,
    sparse: bool = False,
) -> HermitianOperator:
    """Hardcore-boson hopping ``sum J (s+_i s-_j + h.c.) + sum W_i n_i``.

    ``bonds`` pairs each edge with its amplitude in rad/ns.
    """
    if basis.levels != 2 or basis.num_excitations is None:
        raise ValueError("hopping operators live in a fixed-excitation sector")
    if len(potential) != basis.num_sites:
        raise ValueError(
            f"potential has {len(potential)} sites, lattice has {basis.num_sites}"
        )
    states = basis.states
    n = basis.dimension
    rows, cols, vals = [], [], []
    occ = basis.occupation_matrix()
    diag = occ @ potential.values
    rows.append(np.arange(n))
    cols.append(np.arange(n))
    vals.append(diag)
    for (i, j), amp in bonds:
        if amp == 0.0:
            continue
        movable = ((states >> i) & 1) != ((states >> j) & 1)
        src = np.flatnonzero(movable)
        dst = np.searchsorted(states, states[src] ^ ((1 << i) | (1 << j)))
        rows.append(dst)
        cols.append(src)
        vals.append(np.full(src.size, amp))
    mat = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    ).tocsr()
    mat.sum_duplicates()
    return HermitianOperator(basis, mat if sparse else mat.toarray())


def xy_chain(
    num_sites: int,
    num_excitations: int,
    j1_mhz: float,
    potential: PotentialPattern | None = None,
    sparse: bool = False,
    cap: int = DEFAULT_DIMENSION_CAP,
) -> HermitianOperator:
    basis = build_sector_basis(num_sites, num_excitations, cap=cap)
    if potential is None:
        potential = PotentialPattern.uniform_zero(num_sites)
    j1 = mhz_to_angular(j1_mhz)
    return hopping_operator(basis, [(b, j1) for b in chain_bonds(num_sites)], potential, sparse)


def lattice_2d(
    nx: int,
    ny: int,
    num_excitations: int,
    j1_mhz: float,
    j2_mhz: float,
    w_mhz: float | PotentialPattern = 0.0,
    sparse: bool = False,
    cap: int = DEFAULT_DIMENSION_CAP,
) -> HermitianOperator:
    """Square lattice with nn ``J1``, diagonal ``J2`` and a checkerboard potential.

    Pass a :class:`PotentialPattern` instead of ``w_mhz`` to override the
    checkerboard.
    """
    basis = build_sector_basis(nx * ny, num_excitations, cap=cap)
    if isinstance(w_mhz, PotentialPattern):
        potential = w_mhz
    else:
        potential = PotentialPattern.checkerboard(nx, ny, w_mhz)
    nn, nnn = grid_bonds(nx, ny)
    j1, j2 = mhz_to_angular(j1_mhz), mhz_to_angular(j2_mhz)
    bonds = [(b, j1) for b in nn] + [(b, j2) for b in nnn]
    return hopping_operator(basis, bonds, potential, sparse)


def fock_energy(s: str | Sequence[int], potential: PotentialPattern) -> float:
    """Diagonal energy ``sum_i W_i s_i`` of a Fock state (rad/ns)."""
    occ = np.asarray(as_fock(s), dtype=float)
    if occ.size != len(potential):
        raise ValueError(f"pattern has {occ.size} sites, potential has {len(potential)}")
    return float(occ @ potential.values)


def write_operator_csv(op: HermitianOperator, path: str | Path) -> None:
    """Nonzero entries as ``row,col,re,im``."""
    coo = op.sparse().tocoo()
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["row", "col", "re", "im"])
        for k in order:
            v = complex(coo.data[k])
            w.writerow([int(coo.row[k]), int(coo.col[k]), format(v.real, ".17g"), format(v.imag, ".17g")])
