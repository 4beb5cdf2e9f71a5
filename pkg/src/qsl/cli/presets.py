"""Named scenarios for the figure reproductions and the size-scaling study."""

from __future__ import annotations

import copy

_QUBIT = {"system": "qubit", "delta_mhz": 12.5, "time": {"start_ns": 0, "stop_ns": 250, "step_ns": 0.5}}
_QUTRIT = {"system": "qutrit", "eta_mhz": -212.0, "time": {"start_ns": 0, "stop_ns": 10, "step_ns": 0.02}}
_CHAIN = {
    "system": "chain1d",
    "L": 6,
    "j1_mhz": -2.0,
    "initial_state": {"named": "cat"},
    "time": {"start_ns": 0, "stop_ns": 250, "step_ns": 0.5},
}
_LATTICE = {
    "system": "lattice2d",
    "nx": 3,
    "ny": 3,
    "j1_mhz": -2.0,
    "j2_mhz": 0.597,
    "initial_state": {"named": "checkerboard_plus"},
    "time": {"start_ns": 0, "stop_ns": 300, "step_ns": 0.5},
    "toggles": {"hamming": True},
}


def _ff_chain(L: int) -> dict:
    return {
        "system": "freefermion_chain",
        "L": L,
        "j1_mhz": -2.0,
        "w_mhz": 0.0,
        "initial_state": {"named": "density_wave"},
        "time": {"start_ns": 0, "stop_ns": 250, "step_ns": 0.5},
        # Density-matrix cost grows like L^5 per time point.
        "momentum_step_ns": 0.5 if L <= 24 else (1.0 if L <= 48 else 2.5),
        "toggles": {"bounds": True, "momentum": True},
    }


_TABLE: dict[str, tuple[str, dict]] = {
    "fig1d": ("driven qubit, Omega/2pi = -2.5 MHz, Delta/2pi = 12.5 MHz, |+>", {**_QUBIT, "omega_mhz": -2.5}),
    "fig1e": (
        "driven qubit, Omega = 0, Delta/2pi = 12.5 MHz, |+>",
        # The overlap touches zero here; a small threshold keeps t_perp within 1e-3 ns of it.
        {**_QUBIT, "omega_mhz": 0.0, "epsilon": 1e-5},
    ),
    "fig1f": ("driven qubit, Omega/2pi = 2.5 MHz, Delta/2pi = 12.5 MHz, |+>", {**_QUBIT, "omega_mhz": 2.5}),
    "fig2d": ("driven qutrit, Omega/2pi = -15 MHz, eta/2pi = -212 MHz", {**_QUTRIT, "omega_mhz": -15.0}),
    "fig2e": ("driven qutrit, Omega/2pi = -5 MHz, eta/2pi = -212 MHz", {**_QUTRIT, "omega_mhz": -5.0}),
    "fig2f": ("driven qutrit, Omega/2pi = 8.5 MHz, eta/2pi = -212 MHz", {**_QUTRIT, "omega_mhz": 8.5}),
    "fig3d": ("XY chain L=6, cat state, W = 0", {**_CHAIN, "w_mhz": 0.0}),
    "fig3e": ("XY chain L=6, cat state, W/2pi = 1.8 MHz", {**_CHAIN, "w_mhz": 1.8}),
    "fig3f": ("XY chain L=6, cat state, W/2pi = 8 MHz", {**_CHAIN, "w_mhz": 8.0}),
    "fig4d": ("3x3 lattice, checkerboard Fock state, W = 0", {**_LATTICE, "w_mhz": 0.0}),
    "fig4e": ("3x3 lattice, checkerboard Fock state, W/2pi = 3.4 MHz", {**_LATTICE, "w_mhz": 3.4}),
    "fig4f": ("3x3 lattice, checkerboard Fock state, W/2pi = 6.5 MHz", {**_LATTICE, "w_mhz": 6.5}),
    **{
        f"suppfig_chain_L{L}": (f"free-fermion chain L={L}, density wave quench at W = 0", _ff_chain(L))
        for L in (6, 12, 24, 48, 96)
    },
    "suppfig_lattice_4x4": (
        "4x4 lattice, 8 excitations, row-major density wave, W/2pi = 6.5 MHz (symmetry-reduced spectrum)",
        {
            "system": "lattice2d",
            "nx": 4,
            "ny": 4,
            "j1_mhz": -2.0,
            "j2_mhz": 0.597,
            "w_sites_mhz": [6.5 * (-1) ** i for i in range(16)],
            "initial_state": {"named": "density_wave"},
            "time": {"start_ns": 0, "stop_ns": 300, "step_ns": 0.5},
        },
    ),
    "scaling_study": (
        "Delta E and MT crossover W* for chains L=6..20 and square grids 3x3, 4x4, 5x5",
        {"system": "scaling_study", "j1_mhz": -2.0, "j2_mhz": 0.597},
    ),
}

FIGURE_PRESETS = tuple(f"fig{n}{c}" for n in (1, 2, 3, 4) for c in "def")


def list_presets() -> list[tuple[str, str]]:
    return [(name, desc) for name, (desc, _) in _TABLE.items()]


def preset_document(name: str) -> dict:
    """Full scenario document for ``name`` (a fresh copy)."""
    desc, body = _TABLE[name]
    doc = {"schema_version": 1, "name": name, "description": desc}
    doc.update(copy.deepcopy(body))
    return doc
