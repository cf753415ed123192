import io

import numpy as np
import pytest

from hpibubble.series import IndexSeries, MonthStamp, PricePanel


def make_panel(values_by_region, start=MonthStamp(1990, 1)):
    return PricePanel.from_series(IndexSeries(code, start, vals)
                                  for code, vals in values_by_region.items())


def seasonal_panel(h, years=10, regions=("A", "B"), start=MonthStamp(1990, 1), p0=100.0):
    """Every year repeats the growth pattern h (h[k] is the growth stamped in calendar month k+1)."""
    n = 12 * years
    o = start.ordinal + 1 + np.arange(n)
    g = np.asarray(h)[o % 12]
    levels = p0 * np.exp(np.concatenate([[0.0], np.cumsum(g)]))
    return make_panel({r: levels for r in regions}, start), g


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def csv_text():
    return io.StringIO("date,89120,89121\n1999-05,100,200\n1999-06,101,202.5\n1999-07,102.25,203\n")


def bubble_spec(noise=0.0, seed=0):
    from hpibubble.synth import Background, Bubble, ScenarioSpec
    # 120 months, critical time one year past the last month
    return ScenarioSpec(start=MonthStamp(1995, 1), n_months=120, background=Background(300.0, 0.0, 0.0),
                        bubble=Bubble(B=-50.0, m=0.5, t_c=131.0), noise=noise, seed=seed,
                        time_unit="year")


def crossover_spec():
    from hpibubble.synth import Crossover, ScenarioSpec
    return ScenarioSpec(start=MonthStamp(1990, 1), n_months=180,
                        crossover=Crossover(A=300.0, b=100.0, mu=0.05, t_c=191.0, m=0.5, t_star=120.0),
                        time_unit="year")


@pytest.fixture(scope="session")
def noisy_tc_errors():
    """Signed t_c errors (months) of power-law fits to the noisy bubble scenario, seeds 0..49."""
    from hpibubble.fitting import FitOptions, fit_model
    from hpibubble.models import ModelKind
    from hpibubble.synth import generate
    errs = []
    for seed in range(50):
        spec = bubble_spec(noise=0.01, seed=seed)
        panel, _ = generate(spec)
        res = fit_model(ModelKind.POWER_LAW, panel["R00"], options=FitOptions(time_unit="year"))
        errs.append(res.params.t_c - (spec.start.ordinal + spec.bubble.t_c))
    return np.array(errs)


def rk_blowup(alpha, beta, p0, cap=1e12):
    """Blow-up time by RK45 integration up to p = cap (error of order 1/(alpha cap))."""
    from scipy.integrate import solve_ivp

    def hit(t, y):
        return y[0] - np.log(cap)
    hit.terminal = True

    # integrate ln p so the step size does not collapse as p grows
    sol = solve_ivp(lambda t, y: [alpha * np.exp(y[0]) - beta], (0.0, 1e7), [np.log(p0)],
                    method="RK45", rtol=1e-11, atol=1e-12,
                    events=hit)
    return float(sol.t_events[0][0]) if sol.t_events[0].size else None


# ----------------------------------------------------------------- acceptance report

_CRITERIA = []


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): an acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        detail = dict(item.user_properties).get("detail", "")
        status = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[rep.outcome]
        if rep.outcome == "skipped" and isinstance(rep.longrepr, tuple):
            detail = rep.longrepr[2]
        _CRITERIA.append((mark.args[0], mark.args[1], status, detail))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, status, detail in sorted(_CRITERIA, key=lambda c: c[0]):
        line = f"criterion {number:>2} {status}: {title}"
        terminalreporter.write_line(line + (f" [{detail}]" if detail else ""))
