"""Seeded synthetic index panels with known ground truth.

A scenario combines a smooth trend (exponential background, optional
power-law bubble overlay, or a matched exponential/power-law crossover),
a bilinear seasonal growth component, multiplicative log-normal noise and
an optional trailing three-month rolling mean.  Every region shares the
deterministic part; each region draws its own noise from a sub-seed of the
scenario seed, so regions are reproducible independently of generation
order.

Times inside a scenario (critical time, overlay on/off, crossover) are
month offsets from ``start``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DomainError
from .fitting import TIME_UNITS
from .models import MatchedCrossoverParams
from .series import (GrowthSeries, IndexSeries, MonthStamp, PricePanel, as_stamp,
                     compute_growth)


@dataclass(frozen=True)
class Background:
    a: float = 100.0
    b: float = 0.0
    mu: float = 0.0  # per time unit


@dataclass(frozen=True)
class Bubble:
    B: float
    m: float
    t_c: float  # months after start
    on: float = 0.0
    off: Optional[float] = None  # None: active to the end


@dataclass(frozen=True)
class Crossover:
    """C1-matched exponential -> power-law trend; ``a`` and ``B`` are derived."""

    A: float
    b: float
    mu: float
    t_c: float
    m: float
    t_star: float


@dataclass(frozen=True)
class Seasonal:
    h: Sequence[float] = (0.0,) * 12
    f: Sequence[float] = (1.0,)  # per year from the start year; last value repeats
    j: Sequence[float] = (0.0,)

    def component(self, ordinals: np.ndarray, start_year: int) -> np.ndarray:
        h = np.asarray(self.h, dtype=float)
        if h.shape != (12,):
            raise ValueError("seasonal h needs 12 values")
        years = ordinals // 12 - start_year
        f = np.asarray(self.f, dtype=float)
        j = np.asarray(self.j, dtype=float)
        fy = f[np.minimum(years, len(f) - 1)]
        jy = j[np.minimum(years, len(j) - 1)]
        return fy * h[ordinals % 12] + jy


@dataclass(frozen=True)
class ScenarioSpec:
    start: MonthStamp = MonthStamp(1983, 6)
    n_months: int = 262
    n_regions: int = 1
    background: Background = Background()
    bubble: Optional[Bubble] = None
    crossover: Optional[Crossover] = None
    seasonal: Optional[Seasonal] = None
    noise: float = 0.0
    smoothing: bool = False
    seed: int = 0
    time_unit: str = "month"
    region_codes: Optional[Sequence[str]] = None

    @property
    def unit(self) -> float:
        return TIME_UNITS[self.time_unit]

    def codes(self) -> list[str]:
        if self.region_codes is not None:
            if len(self.region_codes) != self.n_regions:
                raise ValueError("region_codes length must equal n_regions")
            return list(self.region_codes)
        return [f"R{k:02d}" for k in range(self.n_regions)]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["start"] = str(self.start)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioSpec":
        d = dict(d)
        if "start" in d:
            d["start"] = as_stamp(d["start"])
        for key, typ in (("background", Background), ("bubble", Bubble),
                         ("crossover", Crossover), ("seasonal", Seasonal)):
            if d.get(key) is not None:
                val = dict(d[key])
                if typ is Seasonal:
                    val = {k: tuple(v) for k, v in val.items()}
                d[key] = typ(**val)
        if d.get("region_codes") is not None:
            d["region_codes"] = tuple(d["region_codes"])
        return cls(**d)


@dataclass(frozen=True)
class GroundTruth:
    spec: ScenarioSpec
    trend: np.ndarray  # noise-free, seasonality-free levels
    growth: np.ndarray  # noise-free log growth, stamped from start + 1
    levels: np.ndarray  # noise-free levels, before smoothing
    seasonal: np.ndarray  # seasonal growth component, stamped from start + 1
    crossover: Optional[MatchedCrossoverParams] = None

    def to_dict(self) -> dict:
        d = {
            "spec": self.spec.to_dict(),
            "trend": self.trend.tolist(),
            "growth": self.growth.tolist(),
            "levels": self.levels.tolist(),
            "seasonal": self.seasonal.tolist(),
        }
        if self.crossover is not None:
            d["crossover"] = asdict(self.crossover)
        return d


def crossover_params(spec: Crossover, start: MonthStamp, unit: float = 1.0) -> MatchedCrossoverParams:
    """Complete a crossover by value and slope matching at ``t_star``."""
    t0 = float(start.ordinal)
    ts = t0 + spec.t_star
    tc = t0 + spec.t_c
    if not tc > ts:
        raise DomainError("crossover needs t_star < t_c")
    e_star = np.exp(spec.mu * (ts - t0) / unit)
    d_star = (tc - ts) / unit
    B = -spec.b * spec.mu * e_star / (spec.m * d_star ** (spec.m - 1))
    a = spec.A + B * d_star ** spec.m - spec.b * e_star
    return MatchedCrossoverParams(float(a), spec.b, spec.mu, spec.A, float(B), tc, spec.m, ts,
                                  t_ref=t0, unit=unit)


def trend_levels(spec: ScenarioSpec, ordinals: np.ndarray):
    t0 = spec.start.ordinal
    u = spec.unit
    if spec.crossover is not None:
        cp = crossover_params(spec.crossover, spec.start, u)
        return cp.evaluate(ordinals.astype(float)), cp
    bg = spec.background
    level = bg.a + bg.b * np.exp(bg.mu * (ordinals - t0) / u)
    if spec.bubble is not None:
        bb = spec.bubble
        tc = t0 + bb.t_c
        on = t0 + bb.on
        off = ordinals[-1] if bb.off is None else t0 + bb.off
        tt = np.clip(ordinals.astype(float), on, off)
        if np.any(tt >= tc):
            raise DomainError("bubble overlay reaches its critical time inside the panel")
        level = level + bb.B * ((tc - tt) / u) ** bb.m
    return level, None


def rolling_mean3(values: np.ndarray) -> np.ndarray:
    """Trailing mean of (t, t-1, t-2); the first two points average what exists."""
    c = np.cumsum(np.concatenate([[0.0], values]))
    out = np.empty_like(values)
    n = np.arange(1, len(values) + 1)
    lo = np.maximum(n - 3, 0)
    out[:] = (c[n] - c[lo]) / (n - lo)
    return out


def generate(spec: ScenarioSpec) -> tuple[PricePanel, GroundTruth]:
    if spec.n_months < 2:
        raise DomainError("a scenario needs at least two months")
    ordinals = spec.start.ordinal + np.arange(spec.n_months)
    trend, cross = trend_levels(spec, ordinals)
    if not np.all(trend > 0):
        raise DomainError("trend is non-positive somewhere in the panel")
    seasonal = np.zeros(spec.n_months - 1)
    if spec.seasonal is not None:
        seasonal = spec.seasonal.component(ordinals[1:], spec.start.year)
    growth = np.log(trend[1:] / trend[:-1]) + seasonal
    log_clean = np.log(trend[0]) + np.concatenate([[0.0], np.cumsum(growth)])
    clean = np.exp(log_clean)

    children = np.random.SeedSequence(spec.seed).spawn(spec.n_regions)
    series = []
    for code, child in zip(spec.codes(), children):
        rng = np.random.default_rng(child)
        levels = clean
        if spec.noise > 0:
            levels = np.exp(log_clean + spec.noise * rng.standard_normal(spec.n_months))
        if spec.smoothing:
            levels = rolling_mean3(levels)
        if not np.all(levels > 0) or not np.all(np.isfinite(levels)):
            raise DomainError(f"region {code!r}: generated a non-positive price")
        series.append(IndexSeries(code, spec.start, levels))
    truth = GroundTruth(spec, trend, growth, clean, seasonal, cross)
    return PricePanel.from_series(series), truth


def truth_json(truth: GroundTruth) -> str:
    return json.dumps(truth.to_dict(), indent=2, sort_keys=True)


def rolling_mean_transfer(freq_per_year) -> np.ndarray:
    """Power transfer |H(f)|^2 of the trailing 3-month mean (zero at f = 4 and 8)."""
    w = 2 * np.pi * np.asarray(freq_per_year, dtype=float) / 12.0
    return (1 + 2 * np.cos(w)) ** 2 / 9.0


def smoothing_imprint(raw: PricePanel, smoothed: PricePanel, oversample: int = 1):
    """Region-averaged periodogram ratio smoothed/raw of the growth rates.

    Returns ``(frequencies, measured_ratio, expected_ratio)``; for white
    log-price noise the expected ratio is :func:`rolling_mean_transfer`.
    """
    from .seasonality import periodogram

    def mean_power(panel):
        grams = [periodogram(compute_growth(s), oversample) for s in panel]
        return grams[0].frequencies, np.mean([g.power for g in grams], axis=0)

    f, p_raw = mean_power(raw)
    _, p_smooth = mean_power(smoothed)
    return f, p_smooth / p_raw, rolling_mean_transfer(f)
