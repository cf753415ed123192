"""Growth rate versus price level.

Each growth value ``g(t) = ln[p(t)/p(t-1)]`` is paired with the later
price ``p(t)``.  A straight line ``g = alpha * p - beta`` through these
points turns the growth definition into the logistic-type law
``dp/dt = alpha p^2 - beta p``, whose solution blows up in finite time when
the starting price exceeds ``beta / alpha``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DegenerateRegression, DomainError, InsufficientData
from .series import MonthStamp, PricePanel, StampLike, as_stamp, compute_growth


@dataclass(frozen=True)
class PeriodSegmentation:
    """Boundaries split a span into periods; a boundary month opens the next period."""

    boundaries: tuple[MonthStamp, ...]
    labels: Optional[tuple[str, ...]] = None

    def __post_init__(self):
        b = tuple(as_stamp(x) for x in self.boundaries)
        if any(x >= y for x, y in zip(b, b[1:])):
            raise ValueError("segmentation boundaries must be strictly increasing")
        object.__setattr__(self, "boundaries", b)
        if self.labels is not None and len(self.labels) != len(b) + 1:
            raise ValueError("need one label per period (len(boundaries) + 1)")

    @property
    def period_labels(self) -> tuple[str, ...]:
        if self.labels is not None:
            return tuple(self.labels)
        return tuple(f"period {k + 1}" for k in range(len(self.boundaries) + 1))

    def index_of(self, ordinals) -> np.ndarray:
        edges = np.array([b.ordinal for b in self.boundaries])
        return np.searchsorted(edges, np.asarray(ordinals), side="right")


DEFAULT_SEGMENTATION = PeriodSegmentation((MonthStamp(2003, 10), MonthStamp(2004, 10)))
WHOLE_SPAN = PeriodSegmentation(())


@dataclass(frozen=True)
class PhasePoints:
    """Column-oriented (period, region, month, p, g) points."""

    period: np.ndarray
    region: np.ndarray
    ordinal: np.ndarray
    p: np.ndarray
    g: np.ndarray

    def __len__(self) -> int:
        return len(self.p)

    def select(self, mask) -> "PhasePoints":
        return PhasePoints(self.period[mask], self.region[mask], self.ordinal[mask],
                           self.p[mask], self.g[mask])

    def rows(self):
        for k in range(len(self)):
            yield (str(self.period[k]), str(self.region[k]),
                   str(MonthStamp.from_ordinal(int(self.ordinal[k]))), float(self.p[k]), float(self.g[k]))


def all_points(panel: PricePanel, segmentation: PeriodSegmentation | None = None) -> PhasePoints:
    """Every (p(t), g(t)) pair, region by region in panel order, tagged with its period."""
    seg = segmentation or WHOLE_SPAN
    labels = seg.period_labels
    cols = {k: [] for k in ("period", "region", "ordinal", "p", "g")}
    for s in panel:
        g = compute_growth(s)
        o = g.ordinals
        idx = seg.index_of(o)
        cols["period"].append(np.array(labels, dtype=object)[idx])
        cols["region"].append(np.full(len(g), s.region_code, dtype=object))
        cols["ordinal"].append(o)
        cols["p"].append(np.asarray(s.values[1:], dtype=float))
        cols["g"].append(np.asarray(g.values, dtype=float))
    return PhasePoints(*(np.concatenate(cols[k]) for k in ("period", "region", "ordinal", "p", "g")))


def phase_points(panel: PricePanel, segmentation: PeriodSegmentation | None = None) -> dict[str, PhasePoints]:
    """The points of :func:`all_points` grouped by period label.

    Periods in which no month falls get an empty point set.
    """
    pts = all_points(panel, segmentation)
    labels = (segmentation or WHOLE_SPAN).period_labels
    return {lab: pts.select(pts.period == lab) for lab in labels}


def concat_points(groups: Sequence[PhasePoints]) -> PhasePoints:
    return PhasePoints(*(np.concatenate([getattr(g, k) for g in groups])
                         for k in ("period", "region", "ordinal", "p", "g")))


@dataclass(frozen=True)
class GrowthPriceRegression:
    """OLS of g on p, written ``g = alpha * p - beta``."""

    alpha: float
    beta: float
    correlation: float
    n: int
    scope: str

    @property
    def intercept(self) -> float:
        return -self.beta

    @property
    def slope_per_100(self) -> float:
        """Slope per 100 index units, the convention of ``g = s * p/100 - beta``."""
        return 100.0 * self.alpha

    def to_dict(self) -> dict:
        return {"scope": self.scope, "alpha": self.alpha, "slope_per_100": self.slope_per_100,
                "beta": self.beta, "intercept": self.intercept,
                "correlation": self.correlation, "n": self.n}


def ols_growth_price(p, g, scope: str = "pooled") -> GrowthPriceRegression:
    p = np.asarray(p, dtype=float)
    g = np.asarray(g, dtype=float)
    n = len(p)
    if n < 3:
        raise InsufficientData(f"{scope}: need at least 3 (p, g) pairs, got {n}")
    pc = p - p.mean()
    gc = g - g.mean()
    spp = float(pc @ pc)
    if spp == 0.0:
        raise DegenerateRegression(f"{scope}: price has zero variance")
    spg = float(pc @ gc)
    sgg = float(gc @ gc)
    alpha = spg / spp
    intercept = float(g.mean() - alpha * p.mean())
    # constant g has no defined correlation; report 0 (no linear association)
    corr = spg / math.sqrt(spp * sgg) if sgg > 0 else 0.0
    return GrowthPriceRegression(alpha, -intercept, float(np.clip(corr, -1.0, 1.0)), n, scope)


@dataclass(frozen=True)
class RegressionReport:
    pooled: GrowthPriceRegression
    periods: dict[str, GrowthPriceRegression]
    regions: dict[str, GrowthPriceRegression]
    region_corr_mean: float
    region_corr_std: float  # population standard deviation across regions

    def all(self) -> list[GrowthPriceRegression]:
        return [self.pooled, *self.periods.values(), *self.regions.values()]


def regress_growth_on_price(panel: PricePanel,
                            segmentation: PeriodSegmentation | None = None) -> RegressionReport:
    """Pooled, per-period and per-region regressions of growth on price.

    Periods with fewer than three points are left out of ``periods``.
    """
    pts = all_points(panel, segmentation)
    groups = {lab: pts.select(pts.period == lab) for lab in (segmentation or WHOLE_SPAN).period_labels}
    pooled = ols_growth_price(pts.p, pts.g, "pooled")
    periods = {}
    if segmentation is not None:
        for lab, grp in groups.items():
            if len(grp) >= 3:
                periods[lab] = ols_growth_price(grp.p, grp.g, f"period:{lab}")
    regions = {}
    for code in panel.regions:
        sel = pts.select(pts.region == code)
        regions[code] = ols_growth_price(sel.p, sel.g, f"region:{code}")
    corr = np.array([r.correlation for r in regions.values()])
    return RegressionReport(pooled, periods, regions, float(corr.mean()), float(corr.std()))


def ode_singularity_time(alpha: float, beta: float, p0: float,
                         t0: float | StampLike = 0.0) -> Optional[float]:
    """Blow-up time of ``dp/dt = alpha p^2 - beta p`` started at ``p(t0) = p0``.

    With ``u = 1/p`` the equation is linear, ``du/dt = beta u - alpha``, so
    ``u(t) = r + (1/p0 - r) exp(beta (t - t0))`` with ``r = alpha/beta``.
    ``u`` reaches 0 at ``t0 + ln[r / (r - 1/p0)] / beta`` when ``p0 > beta/alpha``;
    otherwise the price stays finite and ``None`` is returned.  ``t0`` may be a
    month stamp, in which case the result is a fractional month ordinal.
    """
    if not (alpha > 0 and beta > 0 and p0 > 0):
        raise DomainError("alpha, beta and p0 must all be positive")
    origin = float(as_stamp(t0).ordinal) if isinstance(t0, (str, MonthStamp)) else float(t0)
    r = alpha / beta
    gap = r - 1.0 / p0
    # p0 = beta/alpha computed in floating point may leave a gap of a few ulps
    if gap <= 4 * np.finfo(float).eps * r:
        return None
    return origin + math.log(r / gap) / beta


def ode_trajectory(alpha: float, beta: float, p0: float, t, t0: float = 0.0) -> np.ndarray:
    """Closed-form price path of the same equation (infinite at and beyond blow-up)."""
    r = alpha / beta
    u = r + (1.0 / p0 - r) * np.exp(beta * (np.asarray(t, dtype=float) - t0))
    with np.errstate(divide="ignore"):
        return np.where(u > 0, 1.0 / u, np.inf)
