"""Scenario execution, sweeps and atomic CSV/JSON output."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .. import freefermion as ff
from ..bounds import (
    envelope,
    generalized_bound_curves,
    generalized_phase_data,
    orthogonalization_times,
    standard_bound_curves,
)
from ..dynamics import detect_orthogonalization, evolve_overlap, hamming_distribution, verify_sandwich
from ..hamiltonians import (
    HermitianOperator,
    PotentialPattern,
    driven_qubit,
    driven_qutrit,
    grid_symmetry_candidates,
    lattice_2d,
    write_operator_csv,
    xy_chain,
)
from ..hilbert import (
    QuantumState,
    as_fock,
    basis_permutation,
    checkerboard_plus,
    density_wave,
    format_bits,
    make_qubit_state,
    make_qutrit_state,
    make_superposition,
    state_from_amplitudes,
)
from ..spectral import (
    SpectralStats,
    classify_regime,
    diagonalize,
    fractional_moments,
    mt_blockage_check,
    phase_point,
    spectral_stats,
    state_spectrum,
)
from ..units import angular_to_mhz
from .config import ConfigError, ScenarioConfig

SANDWICH_TOL = 1e-9
CONFINEMENT_D = 4


# Output helpers.

def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    return format(float(x), ".17g")


def atomic_write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path: Path, header: Sequence[str], columns: Sequence) -> None:
    """Columns of equal length; floats as ``%.17g``, NaN as ``nan``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    cols = [list(c) for c in columns]
    for row in zip(*cols):
        w.writerow([_fmt(v) for v in row])
    atomic_write_text(path, buf.getvalue())


def _json_num(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


# System construction.

@dataclass
class BuiltSystem:
    operator: HermitianOperator | None
    state: QuantumState | None
    # Free-fermion path only.
    hsp: ff.SingleParticleHamiltonian | None = None
    components: list[tuple[complex, str]] = field(default_factory=list)


def _lattice_components(cfg: ScenarioConfig, n_sites: int) -> list[tuple[complex, str]] | None:
    st = cfg.initial_state
    if st.kind == "fock":
        return [(1.0, st.value)]
    if st.kind == "superposition":
        return [(c, f) for c, f in st.value]
    if st.kind == "named":
        if st.value == "density_wave":
            return [(1.0, format_bits(density_wave(n_sites)))]
        if st.value == "cat":
            return [(0.5, format_bits(density_wave(n_sites))), (math.sqrt(3) / 2, format_bits(density_wave(n_sites, 0)))]
        if st.value == "checkerboard_plus":
            return [(1.0, format_bits(checkerboard_plus(cfg.nx, cfg.ny)))]
    return None


def _n_exc(cfg: ScenarioConfig, comps, n_sites: int) -> int:
    if comps is None:
        if cfg.n_exc is None:
            raise ConfigError("n_exc", "required when the state is given as sector amplitudes")
        return cfg.n_exc
    counts = set()
    for k, (_, bits) in enumerate(comps):
        occ = as_fock(bits)
        if len(occ) != n_sites or any(o not in (0, 1) for o in occ):
            raise ConfigError("initial_state", f"pattern {bits!r} is not a {n_sites}-site two-level Fock state")
        counts.add(sum(occ))
    if len(counts) != 1:
        raise ConfigError("initial_state", "components have different excitation numbers")
    n = counts.pop()
    if cfg.n_exc is not None and cfg.n_exc != n:
        raise ConfigError("n_exc", f"state carries {n} excitations, config says {cfg.n_exc}")
    return n


def _potential(cfg: ScenarioConfig, n_sites: int, w: float | None = None) -> PotentialPattern:
    if cfg.w_sites_mhz is not None:
        if w is not None:
            raise ConfigError("w_sites_mhz", "a W sweep needs the uniform w_mhz parameter")
        return PotentialPattern.from_mhz(cfg.w_sites_mhz)
    w = cfg.w_mhz if w is None else w
    if cfg.system == "lattice2d":
        return PotentialPattern.checkerboard(cfg.nx, cfg.ny, w)
    return PotentialPattern.staggered(n_sites, w)


def build_system(cfg: ScenarioConfig, w_override: float | None = None, omega_override: float | None = None) -> BuiltSystem:
    st = cfg.initial_state
    if cfg.system in ("qubit", "qutrit"):
        omega = cfg.omega_mhz if omega_override is None else omega_override
        if cfg.system == "qubit":
            op = driven_qubit(omega, cfg.delta_mhz)
            amps = (1.0, 1.0) if st.kind == "named" else st.value
            if len(amps) != 2:
                raise ConfigError("initial_state.amplitudes", "a qubit needs two amplitudes")
            return BuiltSystem(op, make_qubit_state(amps))
        op = driven_qutrit(omega, cfg.eta_mhz)
        amps = (1.0, 3 / math.sqrt(2), 3 / math.sqrt(2)) if st.kind == "named" else st.value
        if len(amps) != 3:
            raise ConfigError("initial_state.amplitudes", "a qutrit needs three amplitudes")
        return BuiltSystem(op, make_qutrit_state(amps))

    n_sites = cfg.L if cfg.system in ("chain1d", "freefermion_chain") else cfg.nx * cfg.ny
    comps = _lattice_components(cfg, n_sites)
    n = _n_exc(cfg, comps, n_sites)
    pot = _potential(cfg, n_sites, w_override)

    if cfg.system == "freefermion_chain":
        hsp = ff.single_particle_hamiltonian(cfg.L, cfg.j1_mhz, pot)
        return BuiltSystem(None, None, hsp, comps)

    sparse = cfg.method != "eigh"
    try:
        if cfg.system == "chain1d":
            op = xy_chain(cfg.L, n, cfg.j1_mhz, pot, sparse=sparse)
        else:
            op = lattice_2d(cfg.nx, cfg.ny, n, cfg.j1_mhz, cfg.j2_mhz, pot, sparse=sparse)
    except ValueError as exc:
        raise ConfigError("", str(exc)) from None
    if comps is None:
        psi = state_from_amplitudes(op.basis, st.value)
    else:
        psi = make_superposition(op.basis, comps)
    return BuiltSystem(op, psi)


def system_stats(cfg: ScenarioConfig, built: BuiltSystem):
    """``(stats, spectrum or None)``."""
    if built.hsp is not None:
        return ff.chain_stats(built.hsp, built.components), None
    spec = state_spectrum(built.operator, built.state, cfg.method, _symmetry_candidates(cfg, built))
    return spectral_stats(spec), spec


def _symmetry_candidates(cfg: ScenarioConfig, built: BuiltSystem) -> list[np.ndarray] | None:
    if cfg.system not in ("chain1d", "lattice2d") or cfg.method not in ("auto", "symmetry"):
        return None
    basis = built.operator.basis
    nx, ny = (cfg.L, 1) if cfg.system == "chain1d" else (cfg.nx, cfg.ny)
    half = 2 * basis.num_excitations == basis.num_sites
    return [basis_permutation(basis, m, c) for m, c in grid_symmetry_candidates(nx, ny) if half or not c]


# Reports.

@dataclass
class RunReport:
    name: str
    system: str
    regime: str | None
    boundary_flags: dict[str, bool]
    stats_mhz: dict[str, float]
    phase_point: tuple[float, float] | None
    times_ns: dict[str, float]
    t_perp_ns: float | None
    violations: int
    max_excess: float
    files: list[str]
    extra: dict[str, Any] = field(default_factory=dict)
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None and self.violations == 0

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "system": self.system,
            "regime": self.regime,
            "boundary_flags": self.boundary_flags,
            "stats_mhz": {k: _json_num(v) for k, v in self.stats_mhz.items()},
            "phase_point": None if self.phase_point is None else [_json_num(v) for v in self.phase_point],
            "times_ns": {k: _json_num(v) for k, v in self.times_ns.items()},
            "t_perp_ns": _json_num(self.t_perp_ns),
            "sandwich": {"violations": self.violations, "max_excess": _json_num(self.max_excess), "tol": SANDWICH_TOL},
            "files": self.files,
            "extra": self.extra,
            "error": self.error,
        }


def _stats_mhz(s: SpectralStats) -> dict[str, float]:
    return {
        "energy": angular_to_mhz(s.energy),
        "delta_e": angular_to_mhz(s.delta_e),
        "e_min": angular_to_mhz(s.e_min),
        "e_max": angular_to_mhz(s.e_max),
        "e_minus_emin": angular_to_mhz(s.gap_low),
        "emax_minus_e": angular_to_mhz(s.gap_high),
    }


def _regime(stats: SpectralStats):
    if not stats.width > 0:
        return None, {"mt_ml": False, "mt_mlstar": False, "ml_mlstar": False}, None
    r = classify_regime(stats)
    return r.label, {"mt_ml": r.mt_ml, "mt_mlstar": r.mt_mlstar, "ml_mlstar": r.ml_mlstar}, phase_point(stats)


def _first_peak(t: np.ndarray, y: np.ndarray) -> float | None:
    d = np.diff(y)
    for k in range(1, d.size):
        if d[k - 1] > 0 and d[k] <= 0:
            return float(t[k])
    return None


def run_scenario(cfg: ScenarioConfig, out_dir: str | Path | None = None) -> RunReport:
    """Run one scenario and write its files; the report is also written as JSON."""
    out = Path(out_dir if out_dir is not None else cfg.out_dir)
    if cfg.system == "scaling_study":
        return _run_scaling(cfg, out)

    prefix = cfg.file_prefix
    files: list[str] = []
    extra: dict[str, Any] = {}
    built = build_system(cfg)
    stats, spec = system_stats(cfg, built)
    t = cfg.t_grid()
    if built.hsp is not None:
        series = ff.chain_overlap_series(built.hsp, built.components, t)
    else:
        series = evolve_overlap(spec, None, t)

    header = ["t_ns", "overlap", "theta_rad"]
    cols: list = [t, series.F, series.theta]
    violations: list = []
    if cfg.toggles.bounds:
        std = standard_bound_curves(stats, t)
        curves = list(std)
        gen_lo = np.full(t.size, np.nan)
        gen_up = np.full(t.size, np.nan)
        per_alpha: list = []
        if spec is not None:
            alphas = cfg.alpha.grid()
            pd = generalized_phase_data(series, stats, alphas)
            ml, mh = fractional_moments(spec, None, alphas)
            gen = generalized_bound_curves(pd, ml, mh)
            gen_lo, gen_up = envelope(gen)
            curves += gen
            per_alpha = gen
        lower, upper = envelope(curves)
        violations = verify_sandwich(series, lower, upper, SANDWICH_TOL)
        header += ["mt", "ml", "mlstar", "gen_lower_env", "gen_upper_env", "lower_env", "upper_env"]
        cols += [c.values for c in std] + [gen_lo, gen_up, lower, upper]
        if cfg.toggles.per_alpha:
            for c in per_alpha:
                header.append(f"{c.name}_{c.kind}")
                cols.append(c.values)
    path = out / f"{prefix}_overlap.csv"
    write_csv(path, header, cols)
    files.append(path.name)

    if cfg.toggles.hamming:
        if built.operator is None:
            raise ConfigError("toggles.hamming", "needs an exact-diagonalization system")
        sd = diagonalize(built.operator)
        hd = hamming_distribution(sd, built.state, t)
        path = out / f"{prefix}_hamming.csv"
        write_csv(path, ["t_ns"] + [f"d{d}" for d in range(hd.d_max + 1)], [t] + list(hd.probabilities.T))
        files.append(path.name)
        extra["hamming_mean_tail_above_4"] = float(np.mean(hd.tail(CONFINEMENT_D)))

    if cfg.toggles.momentum:
        if len(built.components) != 1:
            raise ConfigError("toggles.momentum", "needs a single Fock initial state")
        tm = cfg.time.with_step(cfg.momentum_step_ns or cfg.time.step_ns).grid()
        nk = ff.momentum_series(built.hsp, built.components[0][1], tm)
        path = out / f"{prefix}_momentum.csv"
        write_csv(path, ["t_ns"] + [f"n_k{j}" for j in range(nk.shape[1])], [tm] + list(nk.T))
        files.append(path.name)
        path = out / f"{prefix}_nk0.csv"
        write_csv(path, ["t_ns", "n_k0"], [tm, nk[:, 0]])
        files.append(path.name)
        extra["nk0_first_peak_ns"] = _first_peak(tm, nk[:, 0])

    if cfg.toggles.export_operator and built.operator is not None:
        path = out / f"{prefix}_operator.csv"
        write_operator_csv(built.operator, path)
        files.append(path.name)

    label, flags, pp = _regime(stats)
    if cfg.toggles.phase_diagram and pp is not None:
        path = out / f"{prefix}_phase.csv"
        write_csv(path, ["x", "y", "regime"], [[pp[0]], [pp[1]], [label]])
        files.append(path.name)
    if spec is not None:
        d, saturates = mt_blockage_check(None, spec)
        extra["bhatia_davis_distance"] = d
        extra["mt_blocked"] = bool(saturates)

    report = RunReport(
        name=cfg.name,
        system=cfg.system,
        regime=label,
        boundary_flags=flags,
        stats_mhz=_stats_mhz(stats),
        phase_point=pp,
        times_ns=orthogonalization_times(stats).as_dict(),
        t_perp_ns=detect_orthogonalization(series, cfg.epsilon),
        violations=len(violations),
        max_excess=max((v.excess for v in violations), default=0.0),
        files=files,
        extra=extra,
    )
    _write_report(report, out, prefix)
    return report


def _write_report(report: RunReport, out: Path, prefix: str) -> None:
    report.files.append(f"{prefix}_report.json")
    atomic_write_text(out / f"{prefix}_report.json", json.dumps(report.to_dict(), indent=2) + "\n")


SCALING_HEADER = [
    "geometry", "L_or_nx", "ny", "deltaE_analytic_MHz", "deltaE_numeric_MHz", "W_star_MHz", "phase_x", "phase_y",
]


def _run_scaling(cfg: ScenarioConfig, out: Path) -> RunReport:
    records = [ff.chain_scaling_record(L, cfg.j1_mhz) for L in cfg.chain_sizes]
    records += [ff.grid_scaling_record(n, cfg.j1_mhz, cfg.j2_mhz) for n in cfg.grid_sizes]
    rows = [
        [r.geometry, r.size[0], r.size[1] if len(r.size) > 1 else 1, r.delta_e_analytic_mhz,
         r.delta_e_numeric_mhz, r.w_star_mhz, r.phase_x, r.phase_y]
        for r in records
    ]
    path = out / f"{cfg.file_prefix}_scaling.csv"
    write_csv(path, SCALING_HEADER, list(zip(*rows)))
    mismatched = ["x".join(map(str, r.size)) for r in records if not r.agrees]
    report = RunReport(
        name=cfg.name, system=cfg.system, regime=None,
        boundary_flags={"mt_ml": False, "mt_mlstar": False, "ml_mlstar": False},
        stats_mhz={}, phase_point=None, times_ns={}, t_perp_ns=None, violations=0, max_excess=0.0,
        files=[path.name], extra={"analytic_numeric_mismatch": mismatched},
    )
    _write_report(report, out, cfg.file_prefix)
    return report


# Sweeps.

SWEEP_PARAMS = {"omega": "omega_mhz", "W": "w_mhz"}
SWEEP_HEADER = [
    "parameter", "value", "delta_e_mhz", "e_minus_emin_mhz", "emax_minus_e_mhz",
    "x", "y", "regime", "t_MT", "t_ML", "t_MLstar",
]


def sweep(cfg: ScenarioConfig, parameter: str, values: Sequence[float]) -> list[list]:
    """One row per value with the three gaps (MHz), regime, phase point and times (ns)."""
    if parameter not in SWEEP_PARAMS:
        raise ConfigError("param", f"unknown sweep parameter {parameter!r} (use omega or W)")
    vals = [float(v) for v in values]
    if not vals or not all(math.isfinite(v) for v in vals):
        raise ConfigError("values", "need at least one finite value")
    if parameter == "omega" and cfg.system not in ("qubit", "qutrit"):
        raise ConfigError("param", f"omega is not a parameter of {cfg.system!r}")
    if parameter == "W" and cfg.system not in ("chain1d", "lattice2d", "freefermion_chain"):
        raise ConfigError("param", f"W is not a parameter of {cfg.system!r}")
    rows = []
    for v in vals:
        if parameter == "omega":
            built = build_system(cfg, omega_override=v)
        else:
            built = build_system(cfg, w_override=v)
        stats, _ = system_stats(cfg, built)
        label, _, pp = _regime(stats)
        times = orthogonalization_times(stats)
        x, y = pp if pp is not None else (math.nan, math.nan)
        rows.append([
            parameter, v, angular_to_mhz(stats.delta_e), angular_to_mhz(stats.gap_low),
            angular_to_mhz(stats.gap_high), x, y, label or "none",
            times.t_mt, times.t_ml, times.t_mlstar,
        ])
    return rows


def write_sweep(path: Path, rows: list[list]) -> None:
    write_csv(path, SWEEP_HEADER, list(zip(*rows)))
