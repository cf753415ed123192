"""Seasonal level forecasts and month-ahead sign prediction."""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import InsufficientData
from .seasonality import SignTable, increments
from .series import (GrowthSeries, MonthProfile, MonthStamp, PricePanel, StampLike,
                     as_stamp, compute_growth, month_profile)


class Scheme(enum.Enum):
    POOLED = "pooled"
    PER_INDEX = "per-index"

    @classmethod
    def parse(cls, text) -> "Scheme":
        if isinstance(text, Scheme):
            return text
        key = str(text).strip().lower().replace("_", "-")
        for s in cls:
            if s.value == key:
                return s
        raise ValueError(f"unknown scheme {text!r}; choose 'pooled' or 'per-index'")


@dataclass(frozen=True)
class SeasonalForecast:
    region_code: str
    origin: MonthStamp
    horizon: int
    predicted_levels: np.ndarray
    low_band: np.ndarray
    high_band: np.ndarray
    scheme: Scheme
    training_window: tuple[MonthStamp, MonthStamp]
    mean_growth: np.ndarray  # 12 calendar-month means used
    requested_scheme: Scheme = Scheme.POOLED

    @property
    def dates(self) -> list[MonthStamp]:
        return [self.origin.shift(k + 1) for k in range(self.horizon)]

    def rows(self):
        for d, v, lo, hi in zip(self.dates, self.predicted_levels, self.low_band, self.high_band):
            yield str(d), float(v), float(lo), float(hi)


def _profile(growth: Sequence[GrowthSeries], training) -> MonthProfile:
    return month_profile(growth, training[0], training[1])


def forecast_levels(panel: PricePanel, region: str, scheme="pooled",
                    training: Optional[tuple[StampLike, StampLike]] = None, horizon: int = 12,
                    pool: Optional[Iterable[str]] = None) -> SeasonalForecast:
    """Extrapolate ``region`` by compounding calendar-month mean growth rates.

    ``predicted[k] = p(origin) * exp(sum of mean growth over the k+1 months
    after origin)``, with the means taken over ``training`` either from all
    ``pool`` regions (default: the whole panel) or from ``region`` alone.
    A per-index request whose training data miss a calendar month falls
    back to the pooled scheme.  The band is ``exp(+-sqrt(cumulative sum of
    pooled monthly variances))`` around the point forecast; it is a
    heuristic spread, not a calibrated interval.
    """
    if region not in panel:
        raise KeyError(region)
    scheme = Scheme.parse(scheme)
    series = panel[region]
    train = (as_stamp(training[0]), as_stamp(training[1])) if training else (panel.start, panel.end)
    pool_codes = list(pool) if pool is not None else panel.regions
    pooled_profile = _profile([compute_growth(panel[c]) for c in pool_codes], train)

    used = scheme
    profile = pooled_profile
    if scheme is Scheme.PER_INDEX:
        try:
            profile = _profile([compute_growth(series)], train)
        except InsufficientData:
            warnings.warn(f"region {region!r}: training window does not cover every calendar "
                          "month; using the pooled scheme", RuntimeWarning, stacklevel=2)
            used = Scheme.POOLED

    origin = series.end
    months = (origin.ordinal + 1 + np.arange(horizon)) % 12
    log_path = np.cumsum(profile.mean[months])
    spread = np.sqrt(np.cumsum(pooled_profile.std[months] ** 2))
    p0 = series.values[-1]
    levels = p0 * np.exp(log_path)
    return SeasonalForecast(region, origin, horizon, levels, p0 * np.exp(log_path - spread),
                            p0 * np.exp(log_path + spread), used, train, profile.mean.copy(), scheme)


# --------------------------------------------------------------------------- signs

@dataclass(frozen=True)
class SignPrediction:
    months: tuple[MonthStamp, ...]
    signs: tuple[str, ...]
    attribution: str = "later"


def predict_signs(table: SignTable, months: Iterable[StampLike]) -> SignPrediction:
    stamps = tuple(as_stamp(m) for m in months)
    dom = table.dominant_sign
    return SignPrediction(stamps, tuple(dom[s.month - 1] for s in stamps), table.attribution)


@dataclass(frozen=True)
class SignEvaluation:
    months: tuple[MonthStamp, ...]
    predicted: tuple[str, ...]
    hits: np.ndarray
    totals: np.ndarray  # non-zero realized increments
    zeros: np.ndarray  # exact-zero realized increments, excluded from totals

    @property
    def ratios(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.totals > 0, self.hits / np.maximum(self.totals, 1), np.nan)

    @property
    def overall(self) -> float:
        return float(self.hits.sum() / self.totals.sum())

    def rows(self):
        for k, m in enumerate(self.months):
            yield (str(m), self.predicted[k], int(self.hits[k]), int(self.totals[k]),
                   int(self.zeros[k]), float(self.ratios[k]))


def evaluate_signs(prediction: SignPrediction, realized: Iterable[GrowthSeries]) -> SignEvaluation:
    """Fraction of series whose realized increment sign matches the prediction, per month."""
    index = {m.ordinal: k for k, m in enumerate(prediction.months)}
    n = len(prediction.months)
    hits = np.zeros(n, dtype=int)
    totals = np.zeros(n, dtype=int)
    zeros = np.zeros(n, dtype=int)
    for g in realized:
        at, d = increments(g, prediction.attribution)
        for o, v in zip(at, d):
            k = index.get(int(o))
            if k is None:
                continue
            if v == 0:
                zeros[k] += 1
                continue
            totals[k] += 1
            hits[k] += ("+" if v > 0 else "-") == prediction.signs[k]
    if totals.sum() == 0:
        raise InsufficientData("realized data do not overlap the predicted months")
    return SignEvaluation(prediction.months, prediction.signs, hits, totals, zeros)


def white_noise_sign_null(n_draws: int = 1_000_000, seed: int = 0) -> float:
    """Success rate of the best sign predictor when growth rates are i.i.d.

    Knowing the current value, the best call for the next change is "+"
    below the median and "-" above it; it is right with probability
    E[max(F, 1 - F)] = 3/4.  Estimated by Monte Carlo on Gaussian pairs with
    the median taken from the sample itself.
    """
    rng = np.random.default_rng(seed)
    now, nxt = rng.standard_normal((2, n_draws))
    med = np.median(now)
    call_up = now < med
    went_up = nxt > now
    return float(np.mean(call_up == went_up))

