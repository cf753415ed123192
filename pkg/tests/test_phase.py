import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hpibubble.errors import DegenerateRegression, DomainError, InsufficientData
from hpibubble.phase import (DEFAULT_SEGMENTATION, PeriodSegmentation, all_points,
                             ode_singularity_time, ode_trajectory, ols_growth_price,
                             phase_points, regress_growth_on_price)
from hpibubble.series import MonthStamp

from conftest import make_panel, rk_blowup

# RK45 on ln p up to p = 1e12 gives 222.45773086
ODE_ORACLE = 222.4577


class TestPoints:
    def test_pairs_growth_with_later_price(self):
        panel = make_panel({"a": [100.0, 110.0, 121.0]})
        pts = all_points(panel)
        assert list(pts.p) == [110.0, 121.0]
        assert np.allclose(pts.g, math.log(1.1), rtol=1e-15)
        assert [MonthStamp.from_ordinal(int(o)) for o in pts.ordinal] == [MonthStamp(1990, 2), MonthStamp(1990, 3)]

    def test_boundary_month_opens_next_period(self):
        panel = make_panel({"a": np.linspace(100, 200, 30)}, MonthStamp(2003, 1))
        groups = phase_points(panel, DEFAULT_SEGMENTATION)
        first, second, third = (groups[k] for k in DEFAULT_SEGMENTATION.period_labels)
        assert MonthStamp.from_ordinal(int(first.ordinal.max())) == MonthStamp(2003, 9)
        assert MonthStamp.from_ordinal(int(second.ordinal.min())) == MonthStamp(2003, 10)
        assert MonthStamp.from_ordinal(int(third.ordinal.min())) == MonthStamp(2004, 10)

    def test_empty_period_allowed(self):
        panel = make_panel({"a": np.linspace(100, 120, 10)}, MonthStamp(1995, 1))
        groups = phase_points(panel, DEFAULT_SEGMENTATION)
        assert len(groups["period 3"]) == 0

    def test_concatenation_is_whole(self):
        panel = make_panel({"a": np.linspace(100, 200, 40), "b": np.linspace(90, 150, 40)},
                           MonthStamp(2002, 6))
        groups = phase_points(panel, DEFAULT_SEGMENTATION)
        assert sum(len(g) for g in groups.values()) == len(all_points(panel)) == 78

    def test_boundaries_must_increase(self):
        with pytest.raises(ValueError):
            PeriodSegmentation(("2004-10", "2003-10"))


class TestRegression:
    def test_exact_line(self):
        p = np.linspace(100, 300, 50)
        r = ols_growth_price(p, 9.22e-5 * p - 7.47e-3)
        assert r.alpha == pytest.approx(9.22e-5, rel=1e-10)
        assert r.beta == pytest.approx(7.47e-3, rel=1e-10)
        assert r.slope_per_100 == pytest.approx(9.22e-3, rel=1e-10)
        assert r.intercept == pytest.approx(-7.47e-3, rel=1e-10)
        assert r.correlation == pytest.approx(1.0)

    def test_constant_price(self):
        with pytest.raises(DegenerateRegression):
            ols_growth_price([5, 5, 5], [1, 2, 3])

    def test_constant_growth_has_zero_correlation(self):
        assert ols_growth_price([1, 2, 3], [0.1, 0.1, 0.1]).correlation == 0.0

    def test_too_few(self):
        with pytest.raises(InsufficientData):
            ols_growth_price([1, 2], [1, 2])

    @given(st.lists(st.tuples(st.floats(1, 1e3), st.floats(-0.1, 0.1)), min_size=3, max_size=60))
    def test_correlation_bounded(self, pairs):
        p, g = map(np.array, zip(*pairs))
        if np.ptp(p) == 0:
            return
        assert -1.0 <= ols_growth_price(p, g).correlation <= 1.0

    def test_report_matches_numpy(self, rng):
        vals = {c: 100 * np.exp(np.cumsum(rng.normal(0.01, 0.01, 40))) for c in "abc"}
        panel = make_panel(vals, MonthStamp(2002, 1))
        rep = regress_growth_on_price(panel, DEFAULT_SEGMENTATION)
        pts = all_points(panel)
        slope, icpt = np.polyfit(pts.p, pts.g, 1)
        assert rep.pooled.alpha == pytest.approx(slope, rel=1e-9)
        assert rep.pooled.intercept == pytest.approx(icpt, rel=1e-9, abs=1e-15)
        assert rep.pooled.correlation == pytest.approx(np.corrcoef(pts.p, pts.g)[0, 1], rel=1e-9)
        corr = [np.corrcoef(vals[c][1:], np.diff(np.log(vals[c])))[0, 1] for c in "abc"]
        assert rep.region_corr_mean == pytest.approx(np.mean(corr), rel=1e-9)
        assert rep.region_corr_std == pytest.approx(np.std(corr), rel=1e-7)
        assert set(rep.periods) == {"period 1", "period 2", "period 3"}


class TestOde:
    def test_reference_coefficients_against_oracle(self):
        assert ode_singularity_time(9.22e-5, 7.47e-3, 100) == pytest.approx(ODE_ORACLE, abs=0.5)

    def test_below_threshold_stays_finite(self):
        assert ode_singularity_time(1e-4, 1e-2, 50) is None
        assert ode_singularity_time(1e-4, 1e-2, 1e-2 / 1e-4) is None

    def test_invalid(self):
        with pytest.raises(DomainError):
            ode_singularity_time(0, 1e-2, 100)

    def test_stamp_origin(self):
        t = ode_singularity_time(9.22e-5, 7.47e-3, 100, "2005-03")
        assert t == pytest.approx(MonthStamp(2005, 3).ordinal + ODE_ORACLE, abs=0.5)

    @settings(max_examples=20, deadline=None)
    @given(st.floats(1e-5, 1e-3), st.floats(1e-3, 2e-2), st.floats(1.05, 3.0))
    def test_closed_form_matches_integration(self, alpha, beta, ratio):
        p0 = ratio * beta / alpha
        assert ode_singularity_time(alpha, beta, p0) == pytest.approx(rk_blowup(alpha, beta, p0), abs=0.5)

    def test_trajectory_solves_the_equation(self):
        a, b, p0 = 9.22e-5, 7.47e-3, 100.0
        t = np.linspace(0, 200, 2001)
        p = ode_trajectory(a, b, p0, t)
        dp = np.gradient(p, t)
        assert np.allclose(dp[1:-1], (a * p * p - b * p)[1:-1], rtol=1e-4)
        assert np.isinf(ode_trajectory(a, b, p0, [230.0])[0])
