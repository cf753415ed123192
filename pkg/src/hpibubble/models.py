"""Closed-form bubble and background price models.

All evaluation times are absolute fractional month ordinals (see
:class:`hpibubble.series.MonthStamp`).  Two clocks enter the formulas:

* the singular term uses ``(t_c - t) / unit``; ``unit`` is the number of
  months per model time unit (1 for monthly, 12 for yearly), so ``B``
  carries units of level per unit**m;
* exponential terms use ``(t - t_ref) / unit`` with ``t_ref`` the start of
  the fitted window, so ``b`` is the exponential amplitude at the window
  start and ``mu`` is a rate per unit.

The tanh argument ``(t_c - t) / tau`` has ``tau`` in months and does not
depend on ``unit``.
"""

from __future__ import annotations

import enum
from dataclasses import asdict, dataclass
from typing import ClassVar, Union

import numpy as np
from scipy.optimize import brentq

from .errors import NoCrossoverError, NotApplicable, SingularityError


class ModelKind(enum.Enum):
    POWER_LAW = "power-law"
    EXPONENTIAL = "exponential"
    TANH_CROSSOVER = "tanh-crossover"
    EXP_TIMES_POWER = "exp-times-power"
    EXP_PLUS_POWER = "exp-plus-power"
    MATCHED_CROSSOVER = "matched-crossover"

    @classmethod
    def parse(cls, text: str) -> "ModelKind":
        key = text.strip().lower().replace("_", "-")
        for k in cls:
            if k.value == key or k.name.lower().replace("_", "-") == key:
                return k
        raise ValueError(f"unknown model {text!r}; choose from {[k.value for k in cls]}")


class RegimeClass(enum.Enum):
    SUPER_EXPONENTIAL = "super-exponential"
    NOT_SUPER_EXPONENTIAL = "not-super-exponential"


def _dist(t_c, t, unit):
    return np.abs(t_c - np.asarray(t, dtype=float)) / unit


def _check_singular(t_c, t, m):
    if m < 0 and np.any(np.asarray(t) == t_c):
        raise SingularityError(f"model is singular at t = t_c = {t_c} for m = {m} < 0")


@dataclass(frozen=True)
class PowerLawParams:
    A: float
    B: float
    m: float
    t_c: float
    unit: float = 1.0
    kind: ClassVar[ModelKind] = ModelKind.POWER_LAW

    def evaluate(self, t):
        _check_singular(self.t_c, t, self.m)
        return self.A + self.B * _dist(self.t_c, t, self.unit) ** self.m

    @property
    def power_coefficient(self):
        return self.B


@dataclass(frozen=True)
class ExponentialParams:
    a: float
    b: float
    mu: float
    t_ref: float = 0.0
    unit: float = 1.0
    kind: ClassVar[ModelKind] = ModelKind.EXPONENTIAL

    def evaluate(self, t):
        tau = (np.asarray(t, dtype=float) - self.t_ref) / self.unit
        return self.a + self.b * np.exp(self.mu * tau)


@dataclass(frozen=True)
class TanhParams:
    A: float
    B: float
    m: float
    t_c: float
    tau: float
    unit: float = 1.0
    kind: ClassVar[ModelKind] = ModelKind.TANH_CROSSOVER

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be positive")

    def evaluate(self, t):
        _check_singular(self.t_c, t, self.m)
        x = np.abs(self.t_c - np.asarray(t, dtype=float)) / self.tau
        return self.A + self.B * np.tanh(x) ** self.m

    @property
    def power_coefficient(self):
        return self.B


@dataclass(frozen=True)
class ExpTimesPowerParams:
    a: float
    b: float
    mu: float
    t_c: float
    m: float
    t_ref: float = 0.0
    unit: float = 1.0
    kind: ClassVar[ModelKind] = ModelKind.EXP_TIMES_POWER

    def evaluate(self, t):
        _check_singular(self.t_c, t, self.m)
        t = np.asarray(t, dtype=float)
        tau = (t - self.t_ref) / self.unit
        return self.a + self.b * np.exp(self.mu * tau) * _dist(self.t_c, t, self.unit) ** self.m

    @property
    def power_coefficient(self):
        return self.b


@dataclass(frozen=True)
class ExpPlusPowerParams:
    a: float
    b: float
    mu: float
    c: float
    t_c: float
    m: float
    t_ref: float = 0.0
    unit: float = 1.0
    kind: ClassVar[ModelKind] = ModelKind.EXP_PLUS_POWER

    def evaluate(self, t):
        _check_singular(self.t_c, t, self.m)
        t = np.asarray(t, dtype=float)
        tau = (t - self.t_ref) / self.unit
        return self.a + self.b * np.exp(self.mu * tau) + self.c * _dist(self.t_c, t, self.unit) ** self.m

    @property
    def power_coefficient(self):
        return self.c


@dataclass(frozen=True)
class MatchedCrossoverParams:
    """Exponential background before ``t_star``, power law from ``t_star`` on."""

    a: float
    b: float
    mu: float
    A: float
    B: float
    t_c: float
    m: float
    t_star: float
    t_ref: float = 0.0
    unit: float = 1.0
    kind: ClassVar[ModelKind] = ModelKind.MATCHED_CROSSOVER

    def exp_branch(self, t):
        tau = (np.asarray(t, dtype=float) - self.t_ref) / self.unit
        return self.a + self.b * np.exp(self.mu * tau)

    def power_branch(self, t):
        return self.A + self.B * _dist(self.t_c, t, self.unit) ** self.m

    def evaluate(self, t):
        t = np.asarray(t, dtype=float)
        _check_singular(self.t_c, t[t >= self.t_star], self.m)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(t < self.t_star, self.exp_branch(t), self.power_branch(t))

    @property
    def power_coefficient(self):
        return self.B

    def matching_residuals(self) -> tuple[float, float]:
        """Relative value and slope mismatch of the two branches at ``t_star``."""
        ts, u = self.t_star, self.unit
        e = np.exp(self.mu * (ts - self.t_ref) / u)
        d = (self.t_c - ts) / u
        v_exp = self.a + self.b * e
        v_pow = self.A + self.B * d ** self.m
        s_exp = self.b * self.mu / u * e
        s_pow = -self.B * self.m / u * d ** (self.m - 1)
        rel_v = abs(v_exp - v_pow) / max(abs(v_exp), abs(v_pow), 1e-300)
        rel_s = abs(s_exp - s_pow) / max(abs(s_exp), abs(s_pow), 1e-300)
        return float(rel_v), float(rel_s)


FitParams = Union[PowerLawParams, ExponentialParams, TanhParams,
                  ExpTimesPowerParams, ExpPlusPowerParams, MatchedCrossoverParams]

PARAMS_BY_KIND = {
    ModelKind.POWER_LAW: PowerLawParams,
    ModelKind.EXPONENTIAL: ExponentialParams,
    ModelKind.TANH_CROSSOVER: TanhParams,
    ModelKind.EXP_TIMES_POWER: ExpTimesPowerParams,
    ModelKind.EXP_PLUS_POWER: ExpPlusPowerParams,
    ModelKind.MATCHED_CROSSOVER: MatchedCrossoverParams,
}

# free parameters counted as in the model definitions (t_star is derived)
N_PARAMS = {
    ModelKind.POWER_LAW: 4,
    ModelKind.EXPONENTIAL: 3,
    ModelKind.TANH_CROSSOVER: 5,
    ModelKind.EXP_TIMES_POWER: 5,
    ModelKind.EXP_PLUS_POWER: 6,
    ModelKind.MATCHED_CROSSOVER: 7,
}


def eval_model(kind: ModelKind, params: FitParams, t):
    if params.kind is not kind:
        raise TypeError(f"{type(params).__name__} does not describe a {kind.value} model")
    out = params.evaluate(t)
    return float(out) if np.ndim(out) == 0 else out


def params_dict(params: FitParams) -> dict:
    d = asdict(params)
    if "t_c" in d:
        d["t_c_year"] = d["t_c"] / 12.0
    if "t_star" in d:
        d["t_star_year"] = d["t_star"] / 12.0
    return d


def classify_regime(kind: ModelKind, params: FitParams) -> RegimeClass:
    """Super-exponential iff (B < 0 and 0 < m < 1) or (B > 0 and m < 0).

    ``B`` is the coefficient of the power-law term (``b`` for the
    exponential-times-power form, ``c`` for exponential-plus-power).
    """
    if kind is ModelKind.EXPONENTIAL:
        raise NotApplicable("the exponential model has no power-law component")
    if params.kind is not kind:
        raise TypeError(f"{type(params).__name__} does not describe a {kind.value} model")
    B, m = params.power_coefficient, params.m
    if (B < 0 and 0 < m < 1) or (B > 0 and m < 0):
        return RegimeClass.SUPER_EXPONENTIAL
    return RegimeClass.NOT_SUPER_EXPONENTIAL


def find_crossover(a, b, mu, A, B, t_c, m, lo, hi, *, t_ref=0.0, unit=1.0,
                   n_grid=512, xtol=1e-12) -> float:
    """First root in ``[lo, hi]`` of exp_branch(t) - power_branch(t).

    The bracket is located on a uniform grid and refined with Brent's method.
    """
    hi = min(hi, t_c - 1e-9 * max(1.0, abs(t_c)))
    if not hi > lo:
        raise NoCrossoverError("empty search interval before t_c")

    def gap(t):
        return (a + b * np.exp(mu * (t - t_ref) / unit)) - (A + B * ((t_c - t) / unit) ** m)

    grid = np.linspace(lo, hi, n_grid + 1)
    vals = gap(grid)
    zero = np.flatnonzero(vals == 0)
    change = np.flatnonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)
    if zero.size and (not change.size or zero[0] <= change[0]):
        return float(grid[zero[0]])
    if not change.size:
        raise NoCrossoverError(f"branches do not cross in [{lo}, {hi}]")
    k = change[0]
    return float(brentq(gap, grid[k], grid[k + 1], xtol=xtol, rtol=4 * np.finfo(float).eps))
