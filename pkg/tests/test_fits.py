import math

import pytest
from hypothesis import given, strategies as st

from fkperc.fits import compare_scalings, fit_decay, fit_line, fit_rate, information_criterion
from fkperc.fk_core import Parameters
from fkperc.sampler import EstimateReport, wilson_report

PRM = Parameters(0.5, 1.0)


def reports(values, trials=10 ** 7):
    return [wilson_report(int(round(v * trials)), trials, 0, PRM) for v in values]


def test_linear_data_prefers_linear():
    ns = [8, 12, 16, 24, 32]
    cmp = compare_scalings(ns, reports([math.exp(-0.5 - 0.3 * n) for n in ns]))
    assert cmp.winner == "linear"
    assert cmp.linear.slope == pytest.approx(0.3, rel=0.02)
    assert cmp.linear.r2 > 0.999


def test_quadratic_data_prefers_quadratic():
    ns = [2, 3, 4, 5, 6]
    cmp = compare_scalings(ns, reports([math.exp(-0.1 - 0.25 * n * n) for n in ns]))
    assert cmp.winner == "quadratic"
    assert cmp.quadratic.slope == pytest.approx(0.25, rel=0.02)


def test_unresolvable_points_excluded():
    ns = [4, 6, 8, 10]
    reps = [wilson_report(500, 1000, 0, PRM), wilson_report(100, 1000, 0, PRM),
            wilson_report(20, 1000, 0, PRM), wilson_report(0, 1000, 0, PRM)]
    fit = fit_rate(ns, reps, "linear")
    assert fit.status == "ok" and fit.used == [4, 6, 8]
    two = fit_rate(ns[:2] + ns[3:], reps[:2] + reps[3:], "linear")
    assert two.status == "insufficient"
    assert compare_scalings(ns[:2], reps[:2]).winner is None
    assert fit_rate([1, 2, 3], [wilson_report(1000, 1000, 0, PRM)] * 3, "linear").status == "insufficient"


def test_information_criterion_small_sample_fallback():
    assert information_criterion(1.0, 3) == 5.0
    assert information_criterion(1.0, 5) == pytest.approx(1.0 + 4 + 12 / 2)


def exact(v):
    return EstimateReport(0, 0, v, v, v, 0, 0.1, 1.0)


def test_decay_fit_exact_path():
    p = 0.07
    fit = fit_decay([1, 2, 3, 4], [exact(p ** d) for d in (1, 2, 3, 4)], exact=True)
    assert fit.c == pytest.approx(-math.log(p), rel=1e-12) and fit.lam == pytest.approx(1.0, rel=1e-12)
    assert fit.decay_confirmed


def test_decay_fit_refusals():
    assert fit_decay([1, 2], [exact(1.0), exact(1.0)], exact=True).status == "no decay"
    zeros = [wilson_report(0, 100, 0, PRM)] * 3
    assert fit_decay([1, 2, 3], zeros).status == "unresolvable at this sample size"
    assert not fit_decay([1, 2, 3], zeros).decay_confirmed


@given(st.floats(-3, 3), st.floats(-5, 5))
def test_fit_line_exact(a, b):
    lf = fit_line([0, 1, 2, 3], [a + b * x for x in range(4)])
    assert lf.slope == pytest.approx(b, abs=1e-9) and lf.intercept == pytest.approx(a, abs=1e-9)
