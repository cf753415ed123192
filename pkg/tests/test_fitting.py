import time
import warnings

import numpy as np
import pytest

from hpibubble.errors import InsufficientData, NoConvergence, NoCrossoverError
from hpibubble.fitting import FitOptions, fit_matched_crossover, fit_model
from hpibubble.models import ModelKind, RegimeClass, classify_regime
from hpibubble.series import IndexSeries, MonthStamp
from hpibubble.synth import Background, ScenarioSpec, generate

from conftest import bubble_spec, crossover_spec

YEAR = FitOptions(time_unit="year")


@pytest.fixture(scope="module")
def bubble():
    spec = bubble_spec()
    panel, truth = generate(spec)
    return spec, panel["R00"]


def test_noiseless_power_law_recovery(bubble):
    spec, s = bubble
    t0 = time.perf_counter()
    res = fit_model(ModelKind.POWER_LAW, s, options=YEAR)
    elapsed = time.perf_counter() - t0
    p = res.params
    assert abs(p.t_c - (spec.start.ordinal + 131)) < 0.1
    assert abs(p.m - 0.5) < 1e-3
    assert res.rms < 1e-8
    assert res.converged
    assert elapsed < 5
    assert classify_regime(ModelKind.POWER_LAW, p) is RegimeClass.SUPER_EXPONENTIAL


def test_fit_is_reproducible(bubble):
    _, s = bubble
    a = fit_model(ModelKind.POWER_LAW, s, options=YEAR)
    b = fit_model(ModelKind.POWER_LAW, s, options=YEAR)
    assert a.params == b.params and a.rms == b.rms and a.start_rms == b.start_rms


def test_thread_count_does_not_change_result(bubble):
    _, s = bubble
    one = fit_model(ModelKind.POWER_LAW, s, options=YEAR)
    four = fit_model(ModelKind.POWER_LAW, s, options=FitOptions(time_unit="year", n_workers=4))
    assert one.params == four.params and one.start_rms == four.start_rms


def test_window_restricts_points(bubble):
    _, s = bubble
    res = fit_model(ModelKind.POWER_LAW, s, ("1998-01", "2003-12"), YEAR)
    assert res.n_points == 72
    assert res.window == (MonthStamp(1998, 1), MonthStamp(2003, 12))


def test_too_few_points():
    s = IndexSeries("x", MonthStamp(2000, 1), np.linspace(100, 110, 5))
    with pytest.raises(InsufficientData):
        fit_model(ModelKind.POWER_LAW, s)


def test_exponential_recovery():
    spec = ScenarioSpec(start=MonthStamp(1990, 1), n_months=120, background=Background(50.0, 100.0, 0.01))
    panel, _ = generate(spec)
    p = fit_model(ModelKind.EXPONENTIAL, panel["R00"]).params
    assert p.mu == pytest.approx(0.01, rel=1e-6)
    assert p.b == pytest.approx(100.0, rel=1e-5)


@pytest.mark.parametrize("kind", [ModelKind.TANH_CROSSOVER, ModelKind.EXP_TIMES_POWER,
                                  ModelKind.EXP_PLUS_POWER])
def test_richer_kinds_fit_a_power_law_at_least_as_well(bubble, kind):
    _, s = bubble
    res = fit_model(kind, s, options=FitOptions(time_unit="year", n_starts=8))
    assert res.rms < 1e-2 * np.std(s.values)


def test_signed_median_bias_within_three_months(noisy_tc_errors):
    assert abs(np.median(noisy_tc_errors)) <= 3.0


def test_matched_crossover_recovery():
    spec = crossover_spec()
    panel, truth = generate(spec)
    res = fit_matched_crossover(panel["R00"], options=FitOptions(time_unit="year"))
    assert abs(res.params.t_star - truth.crossover.t_star) < 0.25
    assert max(res.params.matching_residuals()) < 1e-9


def test_pure_exponential_has_no_crossover():
    spec = ScenarioSpec(start=MonthStamp(1990, 1), n_months=60, background=Background(0.0, 100.0, 0.01))
    panel, _ = generate(spec)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        with pytest.raises(NoCrossoverError) as err:
            fit_matched_crossover(panel["R00"], options=FitOptions(n_starts=8))
    assert err.value.result.kind is ModelKind.MATCHED_CROSSOVER


def test_exhausted_budget_warns_or_raises(bubble):
    _, s = bubble
    tight = dict(time_unit="year", n_starts=2, max_evals=5)
    with pytest.warns(RuntimeWarning):
        res = fit_model(ModelKind.POWER_LAW, s, options=FitOptions(**tight))
    assert not res.converged
    with pytest.raises(NoConvergence) as err:
        fit_model(ModelKind.POWER_LAW, s, options=FitOptions(raise_on_failure=True, **tight))
    assert err.value.result is not None
