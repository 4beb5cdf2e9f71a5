"""Scenario configuration: JSON parsing, schema validation, defaults and round-trip."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache
from importlib import resources
from typing import Any

import jsonschema
import numpy as np

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Invalid scenario; ``path`` is the dotted location of the offending field."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path or '<root>'}: {message}")


@lru_cache(maxsize=1)
def schema() -> dict:
    text = resources.files("qsl").joinpath("schema/scenario.schema.json").read_text()
    return json.loads(text)


SYSTEM_PARAMS = {
    "qubit": ("omega_mhz", "delta_mhz"),
    "qutrit": ("omega_mhz", "eta_mhz"),
    "chain1d": ("L", "j1_mhz", "w_mhz", "w_sites_mhz", "n_exc"),
    "freefermion_chain": ("L", "j1_mhz", "w_mhz", "w_sites_mhz", "n_exc", "momentum_step_ns"),
    "lattice2d": ("nx", "ny", "j1_mhz", "j2_mhz", "w_mhz", "w_sites_mhz", "n_exc"),
    "scaling_study": ("chain_sizes", "grid_sizes", "j1_mhz", "j2_mhz"),
}
ALL_PARAMS = sorted({p for ps in SYSTEM_PARAMS.values() for p in ps})

PARAM_DEFAULTS = {
    "omega_mhz": 0.0,
    "delta_mhz": 12.5,
    "eta_mhz": -212.0,
    "L": 6,
    "nx": 3,
    "ny": 3,
    "j1_mhz": -2.0,
    "j2_mhz": 0.597,
    "w_mhz": 0.0,
    "chain_sizes": (6, 8, 10, 12, 14, 16, 18, 20),
    "grid_sizes": (3, 4, 5),
}

DEFAULT_STATE = {
    "qubit": ("named", "plus"),
    "qutrit": ("named", "qutrit_mix"),
    "chain1d": ("named", "cat"),
    "freefermion_chain": ("named", "density_wave"),
    "lattice2d": ("named", "checkerboard_plus"),
    "scaling_study": ("named", "density_wave"),
}

DEFAULT_TIME = {
    "qutrit": (0.0, 10.0, 0.02),
    "lattice2d": (0.0, 300.0, 0.5),
}
FALLBACK_TIME = (0.0, 250.0, 0.5)


@dataclass(frozen=True)
class TimeGrid:
    start_ns: float
    stop_ns: float
    step_ns: float

    def grid(self) -> np.ndarray:
        n = int(math.floor((self.stop_ns - self.start_ns) / self.step_ns + 1e-9)) + 1
        return self.start_ns + self.step_ns * np.arange(n)

    def with_step(self, step: float) -> TimeGrid:
        return replace(self, step_ns=step)


@dataclass(frozen=True)
class AlphaGrid:
    min: float = 0.2
    max: float = 5.0
    count: int = 25
    values: tuple[float, ...] | None = None

    def grid(self) -> np.ndarray:
        if self.values is not None:
            return np.array(self.values, dtype=float)
        if self.count == 1:
            return np.array([self.min])
        return np.logspace(np.log10(self.min), np.log10(self.max), self.count)

    def to_dict(self) -> dict:
        if self.values is not None:
            return {"values": list(self.values)}
        return {"min": self.min, "max": self.max, "count": self.count}


@dataclass(frozen=True)
class Toggles:
    bounds: bool = True
    hamming: bool = False
    momentum: bool = False
    phase_diagram: bool = False
    per_alpha: bool = False
    export_operator: bool = False


@dataclass(frozen=True)
class InitialState:
    """One of ``amplitudes``, ``fock``, ``superposition`` or ``named``."""

    kind: str
    value: Any

    def to_dict(self) -> dict:
        if self.kind == "amplitudes":
            return {"amplitudes": [_complex_out(a) for a in self.value]}
        if self.kind == "superposition":
            return {"superposition": [{"coeff": _complex_out(c), "fock": f} for c, f in self.value]}
        return {self.kind: self.value}


def _complex_in(v) -> complex:
    return complex(v[0], v[1]) if isinstance(v, list) else complex(v)


def _complex_out(c: complex):
    return c.real if c.imag == 0 else [c.real, c.imag]


@dataclass(frozen=True)
class ScenarioConfig:
    system: str
    name: str = "scenario"
    description: str = ""
    omega_mhz: float | None = None
    delta_mhz: float | None = None
    eta_mhz: float | None = None
    L: int | None = None
    nx: int | None = None
    ny: int | None = None
    j1_mhz: float | None = None
    j2_mhz: float | None = None
    w_mhz: float | None = None
    w_sites_mhz: tuple[float, ...] | None = None
    n_exc: int | None = None
    chain_sizes: tuple[int, ...] | None = None
    grid_sizes: tuple[int, ...] | None = None
    momentum_step_ns: float | None = None
    initial_state: InitialState = field(default=None)  # type: ignore[assignment]
    time: TimeGrid = field(default=None)  # type: ignore[assignment]
    alpha: AlphaGrid = field(default_factory=AlphaGrid)
    epsilon: float = 1e-3
    method: str = "auto"
    out_dir: str = "."
    prefix: str | None = None
    toggles: Toggles = field(default_factory=Toggles)

    @property
    def file_prefix(self) -> str:
        return self.prefix or self.name

    def t_grid(self) -> np.ndarray:
        return self.time.grid()

    def to_dict(self) -> dict:
        d: dict[str, Any] = {"schema_version": SCHEMA_VERSION, "name": self.name, "system": self.system}
        if self.description:
            d["description"] = self.description
        for p in SYSTEM_PARAMS[self.system]:
            v = getattr(self, p)
            if v is not None:
                d[p] = list(v) if isinstance(v, tuple) else v
        d["initial_state"] = self.initial_state.to_dict()
        d["time"] = asdict(self.time)
        d["alpha"] = self.alpha.to_dict()
        d["epsilon"] = self.epsilon
        d["method"] = self.method
        out = {"dir": self.out_dir}
        if self.prefix is not None:
            out["prefix"] = self.prefix
        d["outputs"] = out
        d["toggles"] = asdict(self.toggles)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False)

    def with_params(self, **changes) -> ScenarioConfig:
        return replace(self, **changes)


def _path(err: jsonschema.ValidationError) -> str:
    parts = [str(p) for p in err.absolute_path]
    if err.validator == "additionalProperties" and err.message:
        # Name the unexpected key itself.
        extra = sorted(set(err.instance) - set(err.schema.get("properties", {})))
        if extra:
            parts.append(extra[0])
    if err.validator == "required":
        missing = err.message.split("'")[1] if "'" in err.message else ""
        if missing:
            parts.append(missing)
    return ".".join(parts)


def _reject_constant(name: str):
    raise ConfigError("", f"non-finite number {name} is not allowed")


def validate_document(doc: Any) -> None:
    validator = jsonschema.Draft202012Validator(schema())
    errors = sorted(validator.iter_errors(doc), key=lambda e: (len(list(e.absolute_path)), str(list(e.absolute_path))))
    if errors:
        # The deepest error is usually the most specific.
        err = max(errors, key=lambda e: len(list(e.absolute_path)))
        raise ConfigError(_path(err), err.message)


def from_dict(doc: dict) -> ScenarioConfig:
    """Validate a fully expanded document (no ``preset`` key) and apply defaults."""
    validate_document(doc)
    system = doc["system"]
    allowed = set(SYSTEM_PARAMS[system])
    for p in ALL_PARAMS:
        if p in doc and p not in allowed:
            raise ConfigError(p, f"not a parameter of system {system!r}")

    kw: dict[str, Any] = {"system": system}
    for key in ("name", "description", "epsilon", "method"):
        if key in doc:
            kw[key] = doc[key]
    for p in SYSTEM_PARAMS[system]:
        v = doc.get(p, PARAM_DEFAULTS.get(p))
        if isinstance(v, (list, tuple)):
            v = tuple(v)
        if isinstance(v, float) and not math.isfinite(v):
            raise ConfigError(p, "must be finite")
        kw[p] = float(v) if p.endswith("_mhz") and p != "w_sites_mhz" and v is not None else v
    if kw.get("w_sites_mhz") is not None:
        kw["w_sites_mhz"] = tuple(float(x) for x in kw["w_sites_mhz"])

    st = doc.get("initial_state")
    if st is None:
        kw["initial_state"] = InitialState(*DEFAULT_STATE[system])
    else:
        (kind, value), = st.items()
        if kind == "amplitudes":
            value = tuple(_complex_in(a) for a in value)
        elif kind == "superposition":
            value = tuple((_complex_in(c["coeff"]), c["fock"]) for c in value)
        kw["initial_state"] = InitialState(kind, value)

    if "time" in doc:
        t = doc["time"]
        tg = TimeGrid(float(t["start_ns"]), float(t["stop_ns"]), float(t["step_ns"]))
        if tg.stop_ns < tg.start_ns:
            raise ConfigError("time.stop_ns", "must not precede time.start_ns")
        kw["time"] = tg
    else:
        kw["time"] = TimeGrid(*DEFAULT_TIME.get(system, FALLBACK_TIME))

    if "alpha" in doc:
        a = doc["alpha"]
        if "values" in a:
            if set(a) - {"values"}:
                raise ConfigError("alpha", "give either values or min/max/count")
            vals = tuple(float(x) for x in a["values"])
            if any(b <= c for c, b in zip(vals, vals[1:])):
                raise ConfigError("alpha.values", "must be strictly ascending")
            kw["alpha"] = AlphaGrid(values=vals)
        else:
            ag = AlphaGrid(float(a.get("min", 0.2)), float(a.get("max", 5.0)), int(a.get("count", 25)))
            if ag.max < ag.min or (ag.count > 1 and ag.max == ag.min):
                raise ConfigError("alpha.max", "must exceed alpha.min")
            kw["alpha"] = ag

    out = doc.get("outputs", {})
    kw["out_dir"] = out.get("dir", ".")
    kw["prefix"] = out.get("prefix")
    kw["toggles"] = Toggles(**doc.get("toggles", {}))
    cfg = ScenarioConfig(**kw)
    _check_semantics(cfg)
    return cfg


def _check_semantics(cfg: ScenarioConfig) -> None:
    kind = cfg.initial_state.kind
    if cfg.system in ("freefermion_chain", "scaling_study") and kind == "amplitudes":
        raise ConfigError("initial_state.amplitudes", f"not supported for system {cfg.system!r}")
    if cfg.system in ("qubit", "qutrit") and kind in ("fock", "superposition"):
        raise ConfigError(f"initial_state.{kind}", "use amplitudes or a named state for a single qubit/qutrit")
    if kind == "named":
        ok = {
            "qubit": {"plus"},
            "qutrit": {"qutrit_mix"},
            "chain1d": {"density_wave", "cat"},
            "freefermion_chain": {"density_wave", "cat"},
            "lattice2d": {"density_wave", "checkerboard_plus"},
            "scaling_study": {"density_wave"},
        }[cfg.system]
        if cfg.initial_state.value not in ok:
            raise ConfigError("initial_state.named", f"{cfg.initial_state.value!r} is not defined for {cfg.system!r}")
    n_sites = {"chain1d": cfg.L, "freefermion_chain": cfg.L}.get(cfg.system)
    if cfg.system == "lattice2d":
        n_sites = cfg.nx * cfg.ny
    if n_sites is not None and cfg.w_sites_mhz is not None and len(cfg.w_sites_mhz) != n_sites:
        raise ConfigError("w_sites_mhz", f"expected {n_sites} values, got {len(cfg.w_sites_mhz)}")
    if cfg.system == "freefermion_chain" and cfg.toggles.hamming:
        raise ConfigError("toggles.hamming", "not available on the free-fermion path")
    if cfg.toggles.momentum and cfg.system != "freefermion_chain":
        raise ConfigError("toggles.momentum", "only available for freefermion_chain")


def expand_preset(doc: dict) -> dict:
    """Replace ``{"preset": name, ...overrides}`` by the preset document with overrides merged."""
    if "preset" not in doc:
        return doc
    from .presets import preset_document

    overrides = {k: v for k, v in doc.items() if k != "preset"}
    name = doc["preset"]
    if not isinstance(name, str):
        raise ConfigError("preset", "must be a preset name")
    try:
        base = preset_document(name)
    except KeyError:
        raise ConfigError("preset", f"unknown preset {name!r}") from None
    for k, v in overrides.items():
        if isinstance(v, dict) and isinstance(base.get(k), dict) and k != "initial_state":
            base[k] = {**base[k], **v}
        else:
            base[k] = v
    return base


def parse_config(text: str) -> ScenarioConfig:
    """Parse, validate and round-trip check a JSON scenario."""
    try:
        doc = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"malformed JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("", "scenario must be a JSON object")
    doc = expand_preset(doc)
    cfg = from_dict(doc)
    if from_dict(json.loads(cfg.to_json())) != cfg:
        raise ConfigError("", "configuration does not survive a serialization round trip")
    return cfg


