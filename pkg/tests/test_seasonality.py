import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hpibubble.errors import InsufficientData
from hpibubble.seasonality import (decompose_bilinear, increments, normalize_factors, periodogram,
                                   sign_table)
from hpibubble.series import GrowthSeries, MonthStamp


def gs(values, start=MonthStamp(1990, 1), code="x"):
    return GrowthSeries(code, start, np.asarray(values, dtype=float))


def direct_power(x, f):
    """Squared amplitude at frequency f (cycles/year) by an explicit sum."""
    x = np.asarray(x) - np.mean(x)
    n = len(x)
    t = np.arange(n)
    c = np.sum(x * np.exp(-2j * np.pi * f * t / 12.0))
    return (1.0 if abs(f - 6.0) < 1e-12 else 4.0) * abs(c) ** 2 / n ** 2


class TestPeriodogram:
    def test_annual_sine_peaks_at_one(self):
        t = np.arange(240)
        pg = periodogram(gs(np.sin(2 * np.pi * t / 12)))
        assert abs(pg.peak_frequency() - 1.0) <= 12 / 240
        assert pg.power.max() == pytest.approx(1.0, rel=1e-12)

    def test_oversampled_peak(self):
        t = np.arange(100)
        pg = periodogram(gs(np.cos(2 * np.pi * t / 12)), oversample=4)
        assert abs(pg.peak_frequency() - 1.0) <= 12 / 400

    @settings(max_examples=40, deadline=None)
    @given(st.integers(24, 130), st.integers(1, 4), st.integers(0, 2**31 - 1))
    def test_parseval(self, n, os, seed):
        x = np.random.default_rng(seed).normal(size=n)
        pg = periodogram(gs(x), oversample=os)
        assert pg.variance() == pytest.approx(np.var(x), rel=1e-10)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(24, 80), st.integers(1, 3), st.integers(0, 2**31 - 1))
    def test_matches_direct_sum(self, n, os, seed):
        x = np.random.default_rng(seed).normal(size=n)
        pg = periodogram(gs(x), oversample=os)
        want = np.array([direct_power(x, f) for f in pg.frequencies])
        assert np.allclose(pg.power, want, rtol=1e-9, atol=1e-14)

    def test_extension_mirrors(self):
        x = np.random.default_rng(3).normal(size=60)
        pg = periodogram(gs(x), max_frequency=12.0)
        for f, p in zip(pg.frequencies[pg.mirrored], pg.power[pg.mirrored]):
            k = np.flatnonzero(np.isclose(pg.frequencies, 12 - f) & ~pg.mirrored)
            assert p == pg.power[k[0]]
        assert pg.frequencies[pg.mirrored].max() <= 12.0

    def test_constant_input_has_no_power(self):
        pg = periodogram(gs(np.full(60, 0.01)), oversample=2)
        assert np.all(pg.power < 1e-20)

    def test_grid(self):
        pg = periodogram(gs(np.random.default_rng(0).normal(size=37)), oversample=3)
        assert np.all(np.diff(pg.frequencies) > 0) and pg.frequencies[-1] == 6.0
        assert np.all(pg.power >= 0)

    def test_short_series(self):
        with pytest.raises(InsufficientData):
            periodogram(gs(np.zeros(23)))


def factorable(rng, n_years):
    f = rng.uniform(0.5, 2.0, n_years)
    h = rng.normal(size=12)
    j = rng.normal(0, 0.01, n_years)
    return f, h, j, (f[:, None] * h[None, :] + j[:, None]).ravel()


class TestBilinear:
    def test_exact_recovery_up_to_gauge(self, rng):
        f, h, j, g = factorable(rng, 8)
        dec = decompose_bilinear(gs(g))
        assert dec.residual_rms < 1e-10
        fn, hn, jn, _ = normalize_factors(f, h, j)
        assert np.allclose(dec.h, hn, atol=1e-8)
        assert np.allclose(dec.f, fn, atol=1e-8)
        assert np.allclose(dec.j, jn, atol=1e-8)
        assert dec.years == list(range(1990, 1998))

    def test_gauge(self, rng):
        *_, g = factorable(rng, 6)
        dec = decompose_bilinear(gs(g))
        assert abs(dec.h.mean()) < 1e-12
        assert np.sqrt(np.mean(dec.h ** 2)) == pytest.approx(1.0, rel=1e-12)
        assert dec.h[4] >= 0

    @pytest.mark.parametrize("seed", range(20))
    def test_cost_never_increases(self, seed):
        x = np.random.default_rng(seed).normal(size=12 * 7)
        dec = decompose_bilinear(gs(x), max_iter=500, tol=0.0)
        c = np.array(dec.cost_history)
        assert np.all(np.diff(c) <= 0.0)

    def test_reconstruction(self, rng):
        dec = decompose_bilinear(gs(rng.normal(0, 0.01, 96)))
        back = dec.fitted() + dec.residuals
        # residuals are stored as g - fitted, so the sum is exact up to rounding
        assert np.max(np.abs(back - dec.data)) <= 4 * np.finfo(float).eps * np.max(np.abs(dec.data))

    @settings(max_examples=30)
    @given(st.floats(0.1, 10), st.floats(-1, 1), st.integers(0, 2**31 - 1))
    def test_gauge_invariance(self, c, d, seed):
        r = np.random.default_rng(seed)
        f, h, j = r.uniform(0.5, 2, 6), r.normal(size=12), r.normal(size=6)
        ref = normalize_factors(f, h, j)
        moved = normalize_factors(c * f, h / c + d, j - d * c * f)
        for a, b in zip(ref[:3], moved[:3]):
            assert np.allclose(a, b, rtol=1e-9, atol=1e-9)

    def test_periodic_input(self):
        h0 = np.sin(np.arange(12.0)) * 0.01
        dec = decompose_bilinear(gs(np.tile(h0, 6)))
        assert dec.residual_rms < 1e-12
        assert np.ptp(dec.f) < 1e-10 and np.ptp(dec.j) < 1e-12

    def test_constant_years_are_degenerate(self):
        g = np.repeat(np.arange(5.0), 12) * 0.01
        dec = decompose_bilinear(gs(g))
        assert dec.degenerate
        assert np.allclose(dec.j, np.arange(5.0) * 0.01)

    def test_needs_two_complete_years(self):
        with pytest.raises(InsufficientData):
            decompose_bilinear(gs(np.zeros(20)))

    def test_year_range_and_argmax(self, rng):
        f, h, j, g = factorable(rng, 10)
        h[4] = abs(h[4]) + 1.0  # keeps the sign gauge from flipping f
        f[4] = 5.0
        g = (f[:, None] * h[None, :] + j[:, None]).ravel()
        dec = decompose_bilinear(gs(g), years=(1992, 1997))
        assert dec.years == list(range(1992, 1998))
        assert dec.argmax_year("f") == 1994

    def test_incomplete_year_uses_what_it_has(self, rng):
        f, h, j, g = factorable(rng, 6)
        dec = decompose_bilinear(gs(g[3:], MonthStamp(1990, 4)))
        assert dec.years[0] == 1990
        assert np.isnan(dec.data[0, :3]).all()
        assert dec.residual_rms < 1e-10

    def test_pooled_is_mean_of_series(self, rng):
        f, h, j, g = factorable(rng, 5)
        noise = rng.normal(0, 0.1, g.size)
        dec = decompose_bilinear([gs(g + noise, code="a"), gs(g - noise, code="b")])
        assert dec.residual_rms < 1e-10

    def test_deterministic(self, rng):
        x = rng.normal(size=96)
        a, b = decompose_bilinear(gs(x)), decompose_bilinear(gs(x))
        assert np.array_equal(a.f, b.f) and np.array_equal(a.h, b.h) and a.cost_history == b.cost_history


class TestSigns:
    def test_attribution(self):
        g = gs([0.0, 1.0, 0.5], MonthStamp(2000, 1))
        at, d = increments(g, "later")
        assert [MonthStamp.from_ordinal(int(o)).month for o in at] == [2, 3]
        at, d = increments(g, "earlier")
        assert [MonthStamp.from_ordinal(int(o)).month for o in at] == [1, 2]
        assert list(d) == [1.0, -0.5]

    def test_counts_match_brute_force(self, rng):
        series = [gs(rng.normal(size=60), MonthStamp(1995, 1 + k), str(k)) for k in range(4)]
        for attr in ("later", "earlier"):
            tab = sign_table(series, attribution=attr)
            pos = [0] * 12
            neg = [0] * 12
            for s in series:
                v = s.values
                for k in range(1, len(v)):
                    month = s.stamps()[k if attr == "later" else k - 1].month
                    if v[k] > v[k - 1]:
                        pos[month - 1] += 1
                    elif v[k] < v[k - 1]:
                        neg[month - 1] += 1
            assert list(tab.positive) == pos and list(tab.negative) == neg

    def test_window_needs_both_ends_inside(self):
        g = gs(np.arange(24.0), MonthStamp(2000, 1))
        at, _ = increments(g, "later", "2000-03", "2000-05")
        assert len(at) == 2

    def test_fractions_sum_to_one(self, rng):
        tab = sign_table([gs(rng.normal(size=50))])
        assert np.allclose(tab.positive_fraction + tab.negative_fraction, 1.0)
        assert np.array_equal(tab.dominant_fraction, np.maximum(tab.positive_fraction, tab.negative_fraction))
        rows = tab.rows()
        assert len(rows) == 12 and rows[0][0] == "Jan"

    def test_increasing_growth_all_positive(self):
        tab = sign_table([gs(np.linspace(0, 1, 40))])
        assert tab.dominant_sign == ["+"] * 12
        assert np.all(tab.dominant_fraction == 1.0)

    def test_seasonal_pattern_recovered(self):
        from hpibubble.series import compute_growth
        from conftest import seasonal_panel
        h = np.sin(2 * np.pi * np.arange(12) / 12 + 0.3) * 0.01
        panel, _ = seasonal_panel(h, years=6)
        tab = sign_table([compute_growth(s) for s in panel])
        want = ["+" if h[m] - h[m - 1] > 0 else "-" for m in range(12)]
        assert tab.dominant_sign == want
        assert np.all(tab.dominant_fraction == 1.0)

    def test_month_without_data(self):
        with pytest.raises(InsufficientData):
            sign_table([gs(np.arange(5.0))])
