"""Fock-space bases, product and superposition states, Hamming distances.

Occupation patterns are encoded little-endian: site 0 is the least
significant bit (or base-``levels`` digit). Bitstrings used for I/O put
site 0 leftmost, so ``"101010"`` occupies sites 0, 2 and 4.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from math import comb
from typing import Iterable, Sequence

import numpy as np

DEFAULT_DIMENSION_CAP = 200_000
MAX_SITES = 24
NORM_TOL = 1e-12

FockState = tuple[int, ...]


def parse_bits(bits: str) -> FockState:
    """Parse a bitstring such as ``"101010"`` (site 0 leftmost)."""
    if not bits or any(c not in "0123456789" for c in bits):
        raise ValueError(f"invalid occupation string {bits!r}")
    return tuple(int(c) for c in bits)


def format_bits(occupations: Sequence[int]) -> str:
    return "".join(str(int(o)) for o in occupations)


def as_fock(state: str | Sequence[int]) -> FockState:
    if isinstance(state, str):
        return parse_bits(state)
    return tuple(int(o) for o in state)


@dataclass(frozen=True)
class Basis:
    """Ordered list of occupation patterns with an exact inverse map.

    ``num_excitations`` is ``None`` for a full product space of
    ``levels ** num_sites`` states (qubit, qutrit); otherwise the basis is
    the fixed-excitation sector of a two-level lattice.
    """

    num_sites: int
    num_excitations: int | None
    levels: int
    states: np.ndarray = field(repr=False, compare=False)

    @property
    def dimension(self) -> int:
        return int(self.states.size)

    def __len__(self) -> int:
        return self.dimension

    def encode(self, occupations: str | Sequence[int]) -> int:
        occ = as_fock(occupations)
        if len(occ) != self.num_sites:
            raise ValueError(
                f"pattern has {len(occ)} sites, basis has {self.num_sites}"
            )
        code = 0
        for site, level in enumerate(occ):
            if not 0 <= level < self.levels:
                raise ValueError(f"level {level} on site {site} outside 0..{self.levels - 1}")
            code += level * self.levels**site
        return code

    def decode(self, code: int) -> FockState:
        occ = []
        for _ in range(self.num_sites):
            code, level = divmod(int(code), self.levels)
            occ.append(level)
        return tuple(occ)

    def index(self, occupations: str | Sequence[int]) -> int:
        """Position of a pattern in :attr:`states`; ``KeyError`` if absent."""
        code = self.encode(occupations)
        i = int(np.searchsorted(self.states, code))
        if i >= self.dimension or self.states[i] != code:
            raise KeyError(f"{format_bits(as_fock(occupations))} is not in this basis")
        return i

    def contains(self, occupations: str | Sequence[int]) -> bool:
        try:
            self.index(occupations)
        except (KeyError, ValueError):
            return False
        return True

    @cached_property
    def index_of(self) -> dict[int, int]:
        return {int(code): i for i, code in enumerate(self.states)}

    def occupation_matrix(self) -> np.ndarray:
        """(dimension, num_sites) integer array of per-site occupations."""
        codes = self.states[:, None]
        powers = self.levels ** np.arange(self.num_sites, dtype=np.int64)
        return (codes // powers) % self.levels

    def bitstrings(self) -> list[str]:
        return [format_bits(self.decode(c)) for c in self.states]


def build_sector_basis(
    num_sites: int, num_excitations: int, cap: int = DEFAULT_DIMENSION_CAP
) -> Basis:
    """Fixed-excitation sector of ``num_sites`` two-level sites."""
    if not 0 < num_sites <= MAX_SITES:
        raise ValueError(f"num_sites must be in 1..{MAX_SITES}, got {num_sites}")
    if not 0 <= num_excitations <= num_sites:
        raise ValueError(
            f"num_excitations must be in 0..{num_sites}, got {num_excitations}"
        )
    dim = comb(num_sites, num_excitations)
    if dim > cap:
        raise ValueError(f"sector dimension {dim} exceeds the cap {cap}")
    codes = np.fromiter(
        (sum(1 << s for s in sites) for sites in combinations(range(num_sites), num_excitations)),
        dtype=np.int64,
        count=dim,
    )
    codes.sort()
    return Basis(num_sites, num_excitations, 2, codes)


def build_full_basis(num_sites: int, levels: int = 2, cap: int = DEFAULT_DIMENSION_CAP) -> Basis:
    if levels not in (2, 3):
        raise ValueError("only qubits and qutrits are supported")
    dim = levels**num_sites
    if dim > cap:
        raise ValueError(f"dimension {dim} exceeds the cap {cap}")
    return Basis(num_sites, None, levels, np.arange(dim, dtype=np.int64))


def hamming_distance(s: str | Sequence[int], s0: str | Sequence[int]) -> int:
    a, b = as_fock(s), as_fock(s0)
    if len(a) != len(b):
        raise ValueError(f"patterns have different lengths: {len(a)} vs {len(b)}")
    return sum(abs(x - y) for x, y in zip(a, b))


def basis_hamming_distances(basis: Basis, s0: str | Sequence[int]) -> np.ndarray:
    """Hamming distance of every basis state to ``s0`` (two-level bases)."""
    if basis.levels != 2:
        return np.array([hamming_distance(basis.decode(c), s0) for c in basis.states])
    code0 = basis.encode(s0)
    return np.bitwise_count(basis.states ^ code0).astype(np.int64)


@dataclass(frozen=True)
class QuantumState:
    basis: Basis
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (self.basis.dimension,):
            raise ValueError(
                f"amplitude vector has shape {amps.shape}, basis dimension is {self.basis.dimension}"
            )
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalized (norm = {norm!r})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    def single_fock_index(self) -> int | None:
        """Index of the basis state if this is a single Fock state, else None."""
        nz = np.flatnonzero(np.abs(self.amplitudes) > NORM_TOL)
        if nz.size == 1:
            return int(nz[0])
        return None


def state_from_amplitudes(basis: Basis, amplitudes: Iterable[complex]) -> QuantumState:
    amps = np.asarray(list(amplitudes), dtype=complex)
    norm = np.linalg.norm(amps)
    if norm == 0 or not np.isfinite(norm):
        raise ValueError("amplitude vector has zero (or non-finite) norm")
    return QuantumState(basis, amps / norm)


def make_product_state(basis: Basis, occupations: str | Sequence[int]) -> QuantumState:
    try:
        i = basis.index(occupations)
    except KeyError as exc:
        raise ValueError(str(exc.args[0])) from None
    amps = np.zeros(basis.dimension, dtype=complex)
    amps[i] = 1.0
    return QuantumState(basis, amps)


def make_superposition(
    basis: Basis, terms: Sequence[tuple[complex, str | Sequence[int]]]
) -> QuantumState:
    """Normalized ``sum_k c_k |s_k>`` over distinct Fock patterns."""
    if not terms:
        raise ValueError("superposition needs at least one term")
    amps = np.zeros(basis.dimension, dtype=complex)
    seen: set[int] = set()
    for coeff, occ in terms:
        try:
            i = basis.index(occ)
        except KeyError as exc:
            raise ValueError(str(exc.args[0])) from None
        if i in seen:
            raise ValueError(f"duplicate pattern {format_bits(as_fock(occ))}")
        seen.add(i)
        amps[i] = complex(coeff)
    return state_from_amplitudes(basis, amps)


def make_qutrit_state(amplitudes: Sequence[complex]) -> QuantumState:
    if len(amplitudes) != 3:
        raise ValueError("a qutrit state needs exactly three amplitudes")
    return state_from_amplitudes(build_full_basis(1, levels=3), amplitudes)


def make_qubit_state(amplitudes: Sequence[complex]) -> QuantumState:
    if len(amplitudes) != 2:
        raise ValueError("a qubit state needs exactly two amplitudes")
    return state_from_amplitudes(build_full_basis(1, levels=2), amplitudes)


# Named patterns used by the lattice scenarios.

def density_wave(num_sites: int, first: int = 1) -> FockState:
    """``|1010...>`` (``first=1``) or ``|0101...>`` (``first=0``)."""
    return tuple((first + i) % 2 for i in range(num_sites))


def checkerboard_plus(nx: int, ny: int) -> FockState:
    """Occupy every site with even ``ix + iy`` (the ``+W`` sublattice)."""
    return tuple(1 - ((i % nx + i // nx) % 2) for i in range(nx * ny))


def basis_permutation(basis: Basis, site_map: Sequence[int], complement: bool = False) -> np.ndarray:
    """Index map ``p`` with ``g|s_i> = |s_{p[i]}>``.

    ``g`` moves the occupation of site ``i`` to ``site_map[i]`` and, with
    ``complement``, then swaps occupied and empty sites.
    """
    if basis.levels != 2:
        raise ValueError("site permutations are implemented for two-level bases")
    site_map = np.asarray(site_map, dtype=np.int64)
    n = basis.num_sites
    if sorted(site_map.tolist()) != list(range(n)):
        raise ValueError("site_map is not a permutation of the sites")
    states = basis.states
    new = np.zeros_like(states)
    for i, j in enumerate(site_map):
        new |= ((states >> i) & 1) << int(j)
    if complement:
        new ^= (1 << n) - 1
    idx = np.searchsorted(states, new)
    inside = idx < states.size
    if not inside.all() or np.any(states[idx] != new):
        raise ValueError("the map leaves the basis")
    return idx
