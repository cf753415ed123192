"""Multi-start nonlinear least squares for the bubble model family.

Coefficients that enter a model linearly are slaved: for every trial of the
nonlinear parameters they are solved exactly by linear least squares, so the
simplex search only moves through the nonlinear ones (critical time,
exponent, rates).  Starts come from a scrambled Sobol sequence over the
search box, so a fixed seed gives a fixed set of starts.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.stats import qmc

from .errors import InsufficientData, NoConvergence, NoCrossoverError
from .models import (N_PARAMS, ExponentialParams, ExpPlusPowerParams, ExpTimesPowerParams,
                     FitParams, MatchedCrossoverParams, ModelKind, PowerLawParams, TanhParams,
                     eval_model, params_dict)
from .series import IndexSeries, MonthStamp, StampLike, window as cut_window

TIME_UNITS = {"month": 1.0, "year": 12.0}
RMS_TIE = 1e-12


@dataclass(frozen=True)
class FitOptions:
    n_starts: int = 32
    max_evals: int = 2000
    xtol: float = 1e-9  # simplex diameter in the unit search box
    seed: int = 0
    time_unit: str = "month"
    n_workers: int = 1
    tc_offset: tuple[float, float] = (1.0, 240.0)  # months beyond the window end
    m_bounds: tuple[float, float] = (-2.0, 2.0)
    m_min_abs: float = 1e-4
    mu_max: float = 0.2  # per month
    tau_bounds: tuple[float, float] = (0.01, 1e4)  # months
    raise_on_failure: bool = False

    @property
    def unit(self) -> float:
        try:
            return TIME_UNITS[self.time_unit]
        except KeyError:
            raise ValueError(f"time_unit must be one of {sorted(TIME_UNITS)}") from None


@dataclass(frozen=True)
class FitResult:
    kind: ModelKind
    params: FitParams
    rms: float
    window: tuple[MonthStamp, MonthStamp]
    n_points: int
    n_starts: int
    converged: bool
    start_rms: tuple[float, ...] = field(default=(), repr=False)
    n_evals: int = 0

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "params": params_dict(self.params),
            "rms": self.rms,
            "window": [str(self.window[0]), str(self.window[1])],
            "n_points": self.n_points,
            "n_starts": self.n_starts,
            "converged": self.converged,
            "n_evals": self.n_evals,
        }


# --------------------------------------------------------------------------- search box

class _Dim:
    """Maps a unit-interval coordinate onto one nonlinear parameter."""

    def __init__(self, name, lo, hi, log=False):
        self.name, self.lo, self.hi, self.log = name, lo, hi, log
        if log:
            self._a, self._b = math.log(lo), math.log(hi)

    def decode(self, u):
        if self.log:
            return math.exp(self._a + u * (self._b - self._a))
        return self.lo + u * (self.hi - self.lo)


class _Problem:
    """Nonlinear parameters of one model kind plus its slaved linear basis."""

    def __init__(self, kind, t, y, opts: FitOptions):
        self.kind = kind
        self.t = t
        self.y = y
        self.opts = opts
        self.unit = opts.unit
        self.t_ref = float(t[0])
        self.t_end = float(t[-1])
        lo_off, hi_off = opts.tc_offset
        tc = _Dim("t_c_offset", lo_off, hi_off, log=True)
        m = _Dim("m", *opts.m_bounds)
        mu_lim = opts.mu_max * self.unit
        mu = _Dim("mu", -mu_lim, mu_lim)
        tau = _Dim("tau", *opts.tau_bounds, log=True)
        tstar = _Dim("t_star", float(t[0]) + 2, float(t[-1]) - 2)
        self.dims = {
            ModelKind.POWER_LAW: [tc, m],
            ModelKind.EXPONENTIAL: [mu],
            ModelKind.TANH_CROSSOVER: [tc, m, tau],
            ModelKind.EXP_TIMES_POWER: [mu, tc, m],
            ModelKind.EXP_PLUS_POWER: [mu, tc, m],
            ModelKind.MATCHED_CROSSOVER: [mu, tc, m, tstar],
        }[kind]

    # -- decoding
    def decode(self, u) -> dict:
        theta = {}
        for d, ui in zip(self.dims, u):
            v = d.decode(float(ui))
            if d.name == "t_c_offset":
                theta["t_c"] = self.t_end + v
            elif d.name == "m":
                if abs(v) < self.opts.m_min_abs:
                    v = math.copysign(self.opts.m_min_abs, v) if v != 0 else self.opts.m_min_abs
                theta["m"] = v
            else:
                theta[d.name] = v
        return theta

    # -- slaved linear design
    def _expo(self, mu, t):
        return np.exp(mu * (t - self.t_ref) / self.unit)

    def _pow(self, t_c, m, t):
        return ((t_c - t) / self.unit) ** m

    def _matched_terms(self, th):
        mu, t_c, m, ts = th["mu"], th["t_c"], th["m"], th["t_star"]
        e_star = self._expo(mu, ts)
        d_star = (t_c - ts) / self.unit
        kappa = -mu * e_star / (m * d_star ** (m - 1))
        return e_star, d_star, kappa

    def basis(self, th, t=None) -> np.ndarray:
        t = self.t if t is None else t
        one = np.ones_like(t)
        k = self.kind
        if k is ModelKind.POWER_LAW:
            cols = [one, self._pow(th["t_c"], th["m"], t)]
        elif k is ModelKind.EXPONENTIAL:
            cols = [one, self._expo(th["mu"], t)]
        elif k is ModelKind.TANH_CROSSOVER:
            cols = [one, np.tanh((th["t_c"] - t) / th["tau"]) ** th["m"]]
        elif k is ModelKind.EXP_TIMES_POWER:
            cols = [one, self._expo(th["mu"], t) * self._pow(th["t_c"], th["m"], t)]
        elif k is ModelKind.EXP_PLUS_POWER:
            cols = [one, self._expo(th["mu"], t), self._pow(th["t_c"], th["m"], t)]
        else:
            # C0 and C1 matching at t_star eliminate a and B; the rest is linear in (A, b)
            e_star, d_star, kappa = self._matched_terms(th)
            ts = th["t_star"]
            before = t < ts
            phi = np.empty_like(t)
            phi[before] = kappa * d_star ** th["m"] - e_star + self._expo(th["mu"], t[before])
            phi[~before] = kappa * self._pow(th["t_c"], th["m"], t[~before])
            cols = [one, phi]
        return np.column_stack(cols)

    def solve(self, th):
        X = self.basis(th)
        if not np.all(np.isfinite(X)):
            return None, math.inf
        coef, *_ = np.linalg.lstsq(X, self.y, rcond=None)
        r = self.y - X @ coef
        return coef, float(r @ r)

    def objective(self, u) -> float:
        _, ssr = self.solve(self.decode(u))
        return ssr if math.isfinite(ssr) else math.inf

    def params(self, th, coef) -> FitParams:
        k, u, tr = self.kind, self.unit, self.t_ref
        c = [float(x) for x in coef]
        if k is ModelKind.POWER_LAW:
            return PowerLawParams(c[0], c[1], th["m"], th["t_c"], unit=u)
        if k is ModelKind.EXPONENTIAL:
            return ExponentialParams(c[0], c[1], th["mu"], t_ref=tr, unit=u)
        if k is ModelKind.TANH_CROSSOVER:
            return TanhParams(c[0], c[1], th["m"], th["t_c"], th["tau"], unit=u)
        if k is ModelKind.EXP_TIMES_POWER:
            return ExpTimesPowerParams(c[0], c[1], th["mu"], th["t_c"], th["m"], t_ref=tr, unit=u)
        if k is ModelKind.EXP_PLUS_POWER:
            return ExpPlusPowerParams(c[0], c[1], th["mu"], c[2], th["t_c"], th["m"], t_ref=tr, unit=u)
        e_star, d_star, kappa = self._matched_terms(th)
        A, b = c
        B = float(b * kappa)
        a = float(A + b * (kappa * d_star ** th["m"] - e_star))
        return MatchedCrossoverParams(a, b, th["mu"], A, B, th["t_c"], th["m"], th["t_star"],
                                      t_ref=tr, unit=u)

    def rms(self, params) -> float:
        r = self.y - eval_model(self.kind, params, self.t)
        return float(np.sqrt(np.mean(r * r)))


# --------------------------------------------------------------------------- driver

def _starts(dim: int, n: int, seed: int) -> np.ndarray:
    sampler = qmc.Sobol(d=dim, scramble=True, seed=seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)  # non power-of-two n
        return sampler.random(n)


def _initial_simplex(x0, step=0.05):
    k = len(x0)
    sim = np.tile(x0, (k + 1, 1))
    for i in range(k):
        sim[i + 1, i] += step if x0[i] + step <= 1 else -step
    return sim


def _run_start(problem: _Problem, x0):
    opts = problem.opts
    res = minimize(problem.objective, x0, method="Nelder-Mead",
                   bounds=[(0.0, 1.0)] * len(x0),
                   options={"xatol": opts.xtol, "fatol": math.inf,
                            "maxfev": opts.max_evals, "maxiter": 10 * opts.max_evals,
                            "initial_simplex": _initial_simplex(np.asarray(x0, float))})
    th = problem.decode(res.x)
    coef, _ = problem.solve(th)
    if coef is None:
        return None, math.inf, bool(res.success), int(res.nfev)
    params = problem.params(th, coef)
    return params, problem.rms(params), bool(res.success), int(res.nfev)


def _select(runs):
    """Lowest rms; ties within RMS_TIE broken by the smaller critical time, then start order."""
    finite = [(i, r) for i, r in enumerate(runs) if r[0] is not None and math.isfinite(r[1])]
    if not finite:
        return None
    best = min(r[1] for _, r in finite)
    tied = [(getattr(r[0], "t_c", 0.0), i, r) for i, r in finite if r[1] <= best + RMS_TIE]
    tied.sort(key=lambda x: (x[0], x[1]))
    return tied[0][2]


def _window_arrays(series: IndexSeries, win):
    if win is None:
        sub = series
    else:
        sub = cut_window(series, win[0], win[1])
    return sub, sub.ordinals.astype(float), np.asarray(sub.values, dtype=float)


def _multistart(kind: ModelKind, series: IndexSeries, win, options: FitOptions | None) -> FitResult:
    opts = options or FitOptions()
    sub, t, y = _window_arrays(series, win)
    need = N_PARAMS[kind] + 2
    if kind is ModelKind.MATCHED_CROSSOVER:
        need = max(need, 10)
    if len(y) < need:
        raise InsufficientData(f"{kind.value} fit needs at least {need} points, window has {len(y)}")
    problem = _Problem(kind, t, y, opts)
    starts = _starts(len(problem.dims), opts.n_starts, opts.seed)
    if opts.n_workers > 1:
        with ThreadPoolExecutor(max_workers=opts.n_workers) as pool:
            runs = list(pool.map(lambda x0: _run_start(problem, x0), starts))
        # map preserves submission order, so the reduction below is schedule-independent
    else:
        runs = [_run_start(problem, x0) for x0 in starts]
    best = _select(runs)
    if best is None:
        raise NoConvergence(f"{kind.value}: every start produced a non-finite objective")
    params, rms, _, _ = best
    converged = any(r[2] for r in runs)
    result = FitResult(kind, params, rms, (sub.start, sub.end), len(y), opts.n_starts,
                       converged, tuple(r[1] for r in runs), sum(r[3] for r in runs))
    if not converged:
        msg = f"{kind.value} fit of {series.region_code!r}: no start met the simplex tolerance"
        if opts.raise_on_failure:
            raise NoConvergence(msg, result)
        warnings.warn(msg, RuntimeWarning, stacklevel=3)
    return result


def fit_model(kind: ModelKind, series: IndexSeries,
              window: tuple[StampLike, StampLike] | None = None,
              options: FitOptions | None = None) -> FitResult:
    """Best of ``options.n_starts`` simplex searches for one model on one window."""
    if kind is ModelKind.MATCHED_CROSSOVER:
        return fit_matched_crossover(series, window, options)
    return _multistart(kind, series, window, options)


def fit_matched_crossover(series: IndexSeries,
                          window: tuple[StampLike, StampLike] | None = None,
                          options: FitOptions | None = None) -> FitResult:
    """Exponential-to-power-law crossover with value and slope matching at ``t_star``.

    The search runs over (mu, t_c, m, t_star); ``a`` and ``B`` follow from the
    two matching conditions and ``A``, ``b`` are slaved.  A best fit whose
    crossover sits on the edge of the admissible interval means the data show
    only one of the two regimes, reported as :class:`NoCrossoverError`.
    """
    result = _multistart(ModelKind.MATCHED_CROSSOVER, series, window, options)
    p = result.params
    lo = result.window[0].ordinal + 2
    hi = result.window[1].ordinal - 2
    if min(p.t_star - lo, hi - p.t_star) < 1e-3:
        err = NoCrossoverError(f"crossover pinned to the window edge at t = {p.t_star:.4f}")
        err.result = result
        raise err
    return result

