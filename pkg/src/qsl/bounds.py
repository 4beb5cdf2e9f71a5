"""Orthogonalization times and lower/upper bound curves on the overlap.

Standard curves (``F >= cos x(t)`` while ``x <= pi/2``):

* MT:      ``x = Delta E t``
* ML:      ``x = sqrt(pi (E - E_min) t / 2)``
* ML*:     ``x = sqrt(pi (E_max - E) t / 2)``

Generalized curves follow from ``cos x + (2a/pi) sin x >= 1 - 2 x^a / pi^a``
applied to every eigenphase ``x = (E_n - E_min) t`` (and the mirrored
``(E_max - E_n) t``). With ``<psi(0)|psi(t)> = F e^{i theta}`` this gives
``F d_a >= 1 - 2 (t/pi)^a <(H - E_min)^a>`` where
``d_a = cos(theta') - (2a/pi) sin(theta')`` and ``theta' = theta + E_min t``;
the sign of ``d_a`` decides whether the inequality bounds ``F`` from below
or from above. Vacuous samples are stored as NaN.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .spectral import SpectralStats

ZERO_RATE = 1e-14
D_TOL = 1e-12
DEFAULT_ALPHAS = np.logspace(np.log10(0.2), np.log10(5.0), 25)


def _time(rate: float) -> float:
    return np.pi / (2.0 * rate) if rate >= ZERO_RATE else np.inf


@dataclass(frozen=True)
class OrthogonalizationTimes:
    t_mt: float
    t_ml: float
    t_mlstar: float

    @property
    def t_u(self) -> float:
        return max(self.t_mt, self.t_ml, self.t_mlstar)

    def as_dict(self) -> dict[str, float]:
        return {"t_MT": self.t_mt, "t_ML": self.t_ml, "t_MLstar": self.t_mlstar, "t_U": self.t_u}


def orthogonalization_times(stats: SpectralStats) -> OrthogonalizationTimes:
    return OrthogonalizationTimes(
        _time(stats.delta_e), _time(stats.gap_low), _time(stats.gap_high)
    )


def generalized_orthogonalization_time(
    moment: float, alpha: float, overlap: float = 0.0, d: float = 1.0
) -> float:
    """``gamma^(1/a) pi / (2^(1/a) E_a)`` with ``gamma = max(0, 1 - F d)``.

    ``moment`` is the raw ``<(H - E_min)^a>`` (or its mirrored form). At
    ``F = 0`` this is the plain generalized ML time.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    gamma = max(0.0, 1.0 - overlap * d)
    if moment < ZERO_RATE**alpha:
        return np.inf
    e_alpha = moment ** (1.0 / alpha)
    return gamma ** (1.0 / alpha) * np.pi / (2.0 ** (1.0 / alpha) * e_alpha)


@dataclass(frozen=True)
class BoundCurve:
    kind: str  # "lower" | "upper"
    name: str
    values: np.ndarray = field(repr=False)
    alpha: float | None = None

    def defined(self) -> np.ndarray:
        return ~np.isnan(self.values)


def _standard(rate_arg: np.ndarray) -> np.ndarray:
    out = np.cos(rate_arg)
    out[rate_arg > np.pi / 2] = np.nan
    return out


def standard_bound_curves(stats: SpectralStats, t_grid) -> list[BoundCurve]:
    """MT, ML and ML* lower curves, vacuous past their first zero."""
    t = np.asarray(t_grid, dtype=float)
    if np.any(t < 0) or np.any(np.diff(t) < 0):
        raise ValueError("time grid must be nonnegative and ascending")
    mt = _standard(stats.delta_e * t)
    ml = _standard(np.sqrt(np.pi * max(stats.gap_low, 0.0) * t / 2.0))
    mls = _standard(np.sqrt(np.pi * max(stats.gap_high, 0.0) * t / 2.0))
    return [BoundCurve("lower", "MT", mt), BoundCurve("lower", "ML", ml), BoundCurve("lower", "MLstar", mls)]


@dataclass(frozen=True)
class GeneralizedPhaseData:
    t: np.ndarray = field(repr=False)
    overlap: np.ndarray = field(repr=False)
    theta: np.ndarray = field(repr=False)
    theta_low: np.ndarray = field(repr=False)   # theta + E_min t
    theta_high: np.ndarray = field(repr=False)  # -(theta + E_max t)
    alphas: np.ndarray = field(repr=False)
    d_low: np.ndarray = field(repr=False)   # (n_alpha, n_t)
    d_high: np.ndarray = field(repr=False)


def _d(theta: np.ndarray, alphas: np.ndarray) -> np.ndarray:
    return np.cos(theta)[None, :] - (2.0 * alphas[:, None] / np.pi) * np.sin(theta)[None, :]


def generalized_phase_data(overlap, stats: SpectralStats, alphas=DEFAULT_ALPHAS) -> GeneralizedPhaseData:
    """Shifted phases and ``d_a`` factors from an overlap series."""
    theta = getattr(overlap, "theta", None)
    if theta is None:
        raise ValueError("overlap series carries no phase data")
    alphas = np.atleast_1d(np.asarray(alphas, dtype=float))
    if np.any(alphas <= 0):
        raise ValueError("alpha must be positive")
    t = np.asarray(overlap.t, dtype=float)
    theta = np.asarray(theta, dtype=float)
    th1 = theta + stats.e_min * t
    th2 = -(theta + stats.e_max * t)
    return GeneralizedPhaseData(
        t, np.asarray(overlap.F, dtype=float), theta, th1, th2, alphas, _d(th1, alphas), _d(th2, alphas)
    )


def _branch_values(d: np.ndarray, numer: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Lower (d > 0) and upper (d < 0) values of ``numer / d``; NaN elsewhere."""
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = numer / d
    lower = np.where(d > D_TOL, np.maximum(0.0, ratio), np.nan)
    upper = np.where(d < -D_TOL, np.minimum(1.0, ratio), np.nan)
    return lower, upper


def _numerators(moments: np.ndarray, alphas: np.ndarray, t: np.ndarray) -> np.ndarray:
    # 1 - 2 (t/pi)^a <(.)^a>
    return 1.0 - 2.0 * (t[None, :] / np.pi) ** alphas[:, None] * moments[:, None]


def generalized_bound_curves(
    pd: GeneralizedPhaseData, moments_low, moments_high, t_grid=None
) -> list[BoundCurve]:
    """Four curves per alpha: GenML / GenMLstar, lower and upper.

    ``moments_low``/``moments_high`` are the raw ``<(H - E_min)^a>`` and
    ``<(E_max - H)^a>`` for ``pd.alphas``.
    """
    t = pd.t if t_grid is None else np.asarray(t_grid, dtype=float)
    ml = np.asarray(moments_low, dtype=float)
    mh = np.asarray(moments_high, dtype=float)
    if t.shape != pd.t.shape or np.any(t != pd.t):
        raise ValueError("time grid does not match the phase data")
    if ml.shape != pd.alphas.shape or mh.shape != pd.alphas.shape:
        raise ValueError("one moment per alpha is required")
    lo1, up1 = _branch_values(pd.d_low, _numerators(ml, pd.alphas, t))
    lo2, up2 = _branch_values(pd.d_high, _numerators(mh, pd.alphas, t))
    curves = []
    for k, a in enumerate(pd.alphas):
        a = float(a)
        curves += [
            BoundCurve("lower", f"GenML({a:.6g})", lo1[k], a),
            BoundCurve("upper", f"GenML({a:.6g})", up1[k], a),
            BoundCurve("lower", f"GenMLstar({a:.6g})", lo2[k], a),
            BoundCurve("upper", f"GenMLstar({a:.6g})", up2[k], a),
        ]
    return curves


def sign_case_bounds(pd: GeneralizedPhaseData, moments_low, moments_high) -> tuple[np.ndarray, np.ndarray]:
    """Per-alpha (lower, upper) arrays combined by the sign of ``(d', d'')``.

    ========  =============================  =============================
    d' / d''  +                              -
    ========  =============================  =============================
    +         max(B'low, B''low) <= F <= 1   B'low <= F <= B''up
    -         B''low <= F <= B'up            0 <= F <= min(B'up, B''up)
    ========  =============================  =============================

    A branch with ``|d| < 1e-12`` contributes nothing.
    """
    t = pd.t
    lo1, up1 = _branch_values(pd.d_low, _numerators(np.asarray(moments_low), pd.alphas, t))
    lo2, up2 = _branch_values(pd.d_high, _numerators(np.asarray(moments_high), pd.alphas, t))
    lower = np.fmax(np.nan_to_num(lo1, nan=0.0), np.nan_to_num(lo2, nan=0.0))
    upper = np.fmin(np.nan_to_num(up1, nan=1.0), np.nan_to_num(up2, nan=1.0))
    return lower, upper


def envelope(curves: list[BoundCurve]) -> tuple[np.ndarray, np.ndarray]:
    """Pointwise max of lower curves (floor 0) and min of upper curves (ceiling 1)."""
    if not curves:
        raise ValueError("envelope of an empty curve list")
    n = curves[0].values.size
    if any(c.values.size != n for c in curves):
        raise ValueError("curves are sampled on different grids")
    lower = np.zeros(n)
    upper = np.ones(n)
    for c in curves:
        v = c.values
        if c.kind == "lower":
            lower = np.fmax(lower, v)
        elif c.kind == "upper":
            upper = np.fmin(upper, v)
        else:
            raise ValueError(f"unknown curve kind {c.kind!r}")
    return lower, upper


def mt_ml_difference(stats: SpectralStats, t_grid) -> np.ndarray:
    """``cos(Delta E t) - cos(sqrt(pi (E - E_min) t / 2))``; nonnegative where MT is the tighter curve."""
    t = np.asarray(t_grid, dtype=float)
    return np.cos(stats.delta_e * t) - np.cos(np.sqrt(np.pi * max(stats.gap_low, 0.0) * t / 2.0))


def mt_dominance_time(stats: SpectralStats) -> float:
    """Crossing ``pi (E - E_min) / (2 Delta E^2)`` of the two cosine arguments.

    Up to ``min(this, t_ML)`` the ML argument lies in ``[0, pi/2]`` and is at
    least the MT argument, so the MT curve is the higher (tighter) one.
    """
    if stats.delta_e < ZERO_RATE:
        return np.inf
    return np.pi * max(stats.gap_low, 0.0) / (2.0 * stats.delta_e**2)
