"""Yearly periodicity of growth rates.

* :func:`periodogram` - mean-removed DFT power in cycles per year.
* :func:`decompose_bilinear` - ``g(12T + m) = f(T) h(m) + j(T)`` by
  alternating least squares.
* :func:`sign_table` - per-calendar-month frequencies of the sign of
  month-over-month growth-rate changes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .errors import InsufficientData
from .series import MONTH_NAMES, GrowthSeries, MonthStamp, StampLike, as_stamp

NYQUIST = 6.0  # cycles per year for monthly sampling
MAY = 4  # zero-based calendar index that fixes the sign of h


# --------------------------------------------------------------------------- spectrum

@dataclass(frozen=True)
class Periodogram:
    """Power on a frequency grid in cycles per year.

    ``power`` is the squared amplitude: a unit-amplitude sinusoid at a
    Fourier frequency of the unpadded signal shows a peak of exactly 1.
    Bins flagged in ``mirrored`` lie above Nyquist and only copy the
    content at ``12 - f``.
    """

    frequencies: np.ndarray
    power: np.ndarray
    series_id: str
    n: int
    oversample: int
    mirrored: np.ndarray

    def variance(self) -> float:
        """Signal variance recovered from the unpadded Fourier bins (Parseval).

        One-sided squared amplitudes carry twice the variance of their
        sinusoid, except at Nyquist where ``cos(pi t)`` has variance equal to
        its squared amplitude.
        """
        pos = self.frequencies * self.n / 12.0  # index on the unpadded Fourier grid
        k_all = np.rint(pos).astype(int)
        on_grid = (~self.mirrored) & (np.abs(pos - k_all) < 1e-9)
        k = k_all[on_grid]
        p = self.power[on_grid]
        nyq = (self.n % 2 == 0) & (2 * k == self.n)
        return float(np.sum(p[~nyq]) / 2 + np.sum(p[nyq]))

    def peak_frequency(self, lo: float = 0.0, hi: float = math.inf) -> float:
        sel = (self.frequencies > lo) & (self.frequencies <= hi)
        return float(self.frequencies[sel][np.argmax(self.power[sel])])


def periodogram(growth: GrowthSeries, oversample: int = 1, max_frequency: float = NYQUIST,
                series_id: str | None = None) -> Periodogram:
    x = np.asarray(growth.values, dtype=float)
    n = len(x)
    if n < 24:
        raise InsufficientData(f"periodogram needs at least 24 months, got {n}")
    if oversample < 1:
        raise ValueError("oversample must be >= 1")
    x = x - x.mean()
    npad = oversample * n
    X = np.fft.rfft(x, npad)[1:]
    freqs = np.arange(1, len(X) + 1) * 12.0 / npad
    power = 4.0 * np.abs(X) ** 2 / n ** 2
    if npad % 2 == 0:
        power[-1] = np.abs(X[-1]) ** 2 / n ** 2
    else:
        alt = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
        freqs = np.append(freqs, NYQUIST)
        power = np.append(power, float(x @ alt) ** 2 / n ** 2)
    mirrored = np.zeros(len(freqs), dtype=bool)
    if max_frequency > NYQUIST:
        inner = freqs < NYQUIST
        ext_f = (12.0 - freqs[inner])[::-1]
        ext_p = power[inner][::-1]
        keep = ext_f <= max_frequency + 1e-12
        freqs = np.concatenate([freqs, ext_f[keep]])
        power = np.concatenate([power, ext_p[keep]])
        mirrored = np.concatenate([mirrored, np.ones(int(keep.sum()), dtype=bool)])
    return Periodogram(freqs, power, series_id or growth.region_code, n, oversample, mirrored)


# --------------------------------------------------------------------------- bilinear model

@dataclass(frozen=True)
class SeasonalDecomposition:
    years: list[int]
    f: np.ndarray
    j: np.ndarray
    h: np.ndarray
    data: np.ndarray  # years x 12, NaN where unobserved
    residuals: np.ndarray  # data - fitted, NaN where unobserved
    residual_rms: float
    iterations: int
    cost_history: list[float] = field(repr=False)
    degenerate: bool = False
    converged: bool = True

    def fitted(self) -> np.ndarray:
        return self.f[:, None] * self.h[None, :] + self.j[:, None]

    def argmax_year(self, which: str) -> int:
        return self.years[int(np.argmax(getattr(self, which)))]


def normalize_factors(f, h, j):
    """Fix the gauge: mean(h) = 0, mean(h**2) = 1, h(May) >= 0.

    Uses the invariances (f, h, j) -> (f/c, c h, j) and
    (f, h, j) -> (f, h + d, j - d f).  Returns ``(f, h, j, degenerate)``.
    """
    f = np.array(f, dtype=float)
    h = np.array(h, dtype=float)
    j = np.array(j, dtype=float)
    d = h.mean()
    h = h - d
    j = j + d * f
    c = math.sqrt(float(np.mean(h * h)))
    if c == 0.0 or not np.any(f):
        return np.zeros_like(f), np.zeros_like(h), j, True
    h = h / c
    f = f * c
    ref = h[MAY] if h[MAY] != 0 else h[np.flatnonzero(h)[0]]
    if ref < 0:
        h, f = -h, -f
    return f, h, j, False


def pool_growth(growth) -> GrowthSeries:
    """Cross-sectional mean growth, month by month."""
    if isinstance(growth, GrowthSeries):
        return growth
    items = list(growth)
    if not items:
        raise InsufficientData("no growth series to pool")
    if len(items) == 1:
        return items[0]
    lo = min(g.start.ordinal for g in items)
    hi = max(g.end.ordinal for g in items)
    total = np.zeros(hi - lo + 1)
    count = np.zeros(hi - lo + 1)
    for g in items:
        k = g.start.ordinal - lo
        total[k:k + len(g)] += g.values
        count[k:k + len(g)] += 1
    if np.any(count == 0):
        raise InsufficientData("pooled panel has months with no series")
    return GrowthSeries("pooled", MonthStamp.from_ordinal(lo), total / count)


def _year_grid(g: GrowthSeries, years) -> tuple[list[int], np.ndarray]:
    o = g.ordinals
    y_all = o // 12
    if years is None:
        first, last = int(y_all[0]), int(y_all[-1])
    else:
        yrs = list(years)
        first, last = int(yrs[0]), int(yrs[-1])
    grid = np.full((last - first + 1, 12), np.nan)
    keep = (y_all >= first) & (y_all <= last)
    grid[y_all[keep] - first, o[keep] % 12] = g.values[keep]
    seen = ~np.all(np.isnan(grid), axis=1)
    return [y for y, s in zip(range(first, last + 1), seen) if s], grid[seen]


def _cost(G, mask, f, h, j):
    r = np.where(mask, G - (f[:, None] * h[None, :] + j[:, None]), 0.0)
    return float(np.sum(r * r))


def decompose_bilinear(growth, years=None, *, max_iter: int = 500, tol: float = 1e-12,
                       check_monotone: bool = True) -> SeasonalDecomposition:
    """Fit ``g(12T + m) = f(T) h(m) + j(T)`` by alternating least squares.

    ``growth`` is one :class:`GrowthSeries` or a collection, which is pooled
    by averaging across series month by month.  ``years`` is an inclusive
    ``(first, last)`` pair (or any iterable whose ends are used); incomplete
    years take part with the months they have.

    Each half-step solves its block exactly: per year, ``(f, j)`` is the OLS
    of that year's values on ``h``; per month, ``h`` is the OLS through the
    origin of ``g - j`` on ``f``.  The cost therefore never increases.  A
    half-step that raises the computed cost by rounding alone is discarded,
    so ``cost_history`` is non-increasing; with ``check_monotone`` a larger
    increase raises ``RuntimeError``.
    """
    g = pool_growth(growth)
    yrs, G = _year_grid(g, years)
    mask = ~np.isnan(G)
    complete = int(np.sum(mask.all(axis=1)))
    if complete < 2:
        raise InsufficientData(f"need at least 2 complete years, found {complete}")
    nY = len(yrs)
    Gz = np.where(mask, G, 0.0)
    n_obs = mask.sum(axis=1)
    year_mean = np.array([Gz[k].sum() / n_obs[k] if n_obs[k] else 0.0 for k in range(nY)])

    within = np.where(mask, G - year_mean[:, None], 0.0)
    if not np.any(within):
        h = np.zeros(12)
        f = np.zeros(nY)
        resid = np.where(mask, G - year_mean[:, None], np.nan)
        return SeasonalDecomposition(yrs, f, year_mean, h, G, resid, 0.0, 0, [0.0], True, True)

    month_mean = Gz.sum(axis=0) / np.maximum(mask.sum(axis=0), 1)
    h = month_mean - month_mean.mean()
    f = np.ones(nY)
    j = year_mean.copy()
    scale = float(np.sum(within * within))
    slack = 1e-12 * scale + 1e-300

    history = [_cost(G, mask, f, h, j)]
    it = 0
    converged = False
    for it in range(1, max_iter + 1):
        f_prev, j_prev = f.copy(), j.copy()
        # (i) per-year 2-parameter OLS on h
        for k in range(nY):
            m = mask[k]
            x, y = h[m], G[k, m]
            xc = x - x.mean()
            sxx = float(xc @ xc)
            if sxx > 0:
                f[k] = float(xc @ (y - y.mean())) / sxx
                j[k] = float(y.mean() - f[k] * x.mean())
            else:
                f[k] = 0.0
                j[k] = float(y.mean()) if y.size else 0.0
        c_half = _cost(G, mask, f, h, j)
        if check_monotone and c_half > history[-1] + slack:
            raise RuntimeError(f"ALS cost increased at iteration {it}")
        if c_half > history[-1]:
            # rounding noise near the optimum; keep the previous block
            f, j, c_half = f_prev, j_prev, history[-1]
        h_prev = h.copy()
        # (ii) per-month OLS through the origin of (g - j) on f
        for mm in range(12):
            m = mask[:, mm]
            fm = f[m]
            sff = float(fm @ fm)
            if sff > 0:
                h[mm] = float(fm @ (G[m, mm] - j[m])) / sff
        c_full = _cost(G, mask, f, h, j)
        if check_monotone and c_full > c_half + slack:
            raise RuntimeError(f"ALS cost increased at iteration {it}")
        if c_full > c_half:
            h, c_full = h_prev, c_half
        prev = history[-1]
        history += [c_half, c_full]
        if c_full == 0.0 or prev - c_full <= tol * prev:
            converged = True
            break

    f, h, j, degenerate = normalize_factors(f, h, j)
    fitted = f[:, None] * h[None, :] + j[:, None]
    resid = np.where(mask, G - fitted, np.nan)
    rms = float(np.sqrt(np.nanmean(resid * resid)))
    return SeasonalDecomposition(yrs, f, j, h, G, resid, rms, it, history, degenerate, converged)


# --------------------------------------------------------------------------- signs

@dataclass(frozen=True)
class SignTable:
    """Per calendar month counts of rising and falling growth rates.

    ``attribution`` says which month an increment ``g(t) - g(t-1)`` is
    filed under: ``"later"`` files it under t, ``"earlier"`` under t-1
    (the "g(t+1) - g(t) at month t" reading).
    """

    positive: np.ndarray
    negative: np.ndarray
    zero: np.ndarray
    attribution: str = "later"

    @property
    def n_observations(self) -> np.ndarray:
        return self.positive + self.negative

    @property
    def positive_fraction(self) -> np.ndarray:
        return self.positive / self.n_observations

    @property
    def negative_fraction(self) -> np.ndarray:
        return self.negative / self.n_observations

    @property
    def dominant_sign(self) -> list[str]:
        # a 50/50 month is reported as "+"
        return ["+" if p >= q else "-" for p, q in zip(self.positive, self.negative)]

    @property
    def dominant_fraction(self) -> np.ndarray:
        return np.maximum(self.positive_fraction, self.negative_fraction)

    def rows(self) -> list[tuple]:
        """One row per calendar month: (month, +%, -%, sign, %)."""
        return [(MONTH_NAMES[k], 100 * float(self.positive_fraction[k]),
                 100 * float(self.negative_fraction[k]), self.dominant_sign[k],
                 100 * float(self.dominant_fraction[k])) for k in range(12)]


def increments(g: GrowthSeries, attribution: str = "later",
               start: StampLike | None = None, stop: StampLike | None = None):
    """``(ordinal, increment)`` pairs with both growth values inside ``[start, stop]``."""
    if attribution not in ("later", "earlier"):
        raise ValueError("attribution must be 'later' or 'earlier'")
    o = g.ordinals
    d = np.diff(g.values)
    earlier, later = o[:-1], o[1:]
    keep = np.ones(len(d), dtype=bool)
    if start is not None:
        keep &= earlier >= as_stamp(start).ordinal
    if stop is not None:
        keep &= later <= as_stamp(stop).ordinal
    at = later if attribution == "later" else earlier
    return at[keep], d[keep]


def sign_table(growth: Iterable[GrowthSeries], start: StampLike | None = None,
               stop: StampLike | None = None, attribution: str = "later") -> SignTable:
    if isinstance(growth, GrowthSeries):
        growth = [growth]
    pos = np.zeros(12, dtype=int)
    neg = np.zeros(12, dtype=int)
    zer = np.zeros(12, dtype=int)
    for g in growth:
        at, d = increments(g, attribution, start, stop)
        m = at % 12
        np.add.at(pos, m[d > 0], 1)
        np.add.at(neg, m[d < 0], 1)
        np.add.at(zer, m[d == 0], 1)
    empty = np.flatnonzero(pos + neg == 0)
    if empty.size:
        raise InsufficientData(f"no non-zero increments for {MONTH_NAMES[empty[0]]}")
    return SignTable(pos, neg, zer, attribution)
