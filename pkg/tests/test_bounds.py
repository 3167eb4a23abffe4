import math

import pytest
from hypothesis import given, settings, strategies as st

from tsdstein.bounds import (
    BoundReport,
    M_alpha,
    M_alpha_closed_form,
    bound_cpd,
    bound_h3_two_tsd,
    bound_normal_example,
    bound_stable,
    bound_vg_example,
    cumulant_gap,
    fit_slope,
    perturbed_params,
    rate_sweep,
    sweep_normal,
)
from tsdstein.charfn import svgd_params
from tsdstein.errors import DivergenceError, DomainError
from tsdstein.model import TsdParams


def test_cpd_bound(bgd):
    assert bound_cpd(bgd, 1) == pytest.approx(1.75**0.4)
    assert bound_cpd(bgd, 32, 2.0) == pytest.approx(2.0 * 1.75**0.4 / 2.0)
    with pytest.raises(DomainError):
        bound_cpd(bgd, 0)


@pytest.mark.parametrize("alpha", [0.1, 0.2, 0.3, 0.4, 0.45])
def test_m_alpha_closed_form(alpha):
    assert M_alpha(alpha) == pytest.approx(M_alpha_closed_form(alpha), rel=1e-8)


@pytest.mark.parametrize("alpha", [0.5, 0.6, 0.9])
def test_m_alpha_diverges(alpha):
    with pytest.raises(DivergenceError):
        M_alpha(alpha)


def test_m_alpha_domain():
    with pytest.raises(DomainError):
        M_alpha(0.0)


def test_h3_bound_worked_example(bgd):
    other = TsdParams(1, 0, 1, 1, 0, 1)
    assert bound_h3_two_tsd(bgd, other) == pytest.approx(0.5 + 0.375 + 7 / 15)
    assert bound_h3_two_tsd(bgd, bgd) == 0.0


def test_h3_bound_vanishes_for_cumulant_matched_pair():
    a, b = svgd_params(1.0, 1.0), svgd_params(4.0, 1.0)
    assert bound_h3_two_tsd(a, b) == pytest.approx(0.0, abs=1e-12)
    assert cumulant_gap(a, b) == pytest.approx(0.0, abs=1e-12)


def test_normal_and_vg_examples():
    p = svgd_params(10.0, 2.0)
    assert bound_normal_example(p, 2.0) == pytest.approx(0.0, abs=1e-12)
    assert bound_vg_example(TsdParams(2, 0, 1, 2, 0, 3), 2.0, 1.0, 3.0) == pytest.approx(0.0, abs=1e-12)
    assert bound_normal_example(TsdParams(1, 0, 1, 1, 0, 2), 1.0) > 0


def test_stable_bound():
    p = TsdParams(1, 0.3, 0.1, 1, 0.3, 0.1)
    assert bound_stable(p, 1.0, 2.0) == pytest.approx(3 * 0.1**0.8)
    with pytest.raises(DomainError):
        bound_stable(TsdParams(1, 0.3, 0.1, 1, 0.2, 0.1), 1, 1)


@given(st.integers(1, 64))
@settings(max_examples=20, deadline=None)
def test_perturbed_params_distance(k):
    target = TsdParams(2.0, 0.3, 2.0, 2.0, 0.3, 2.0)
    p = perturbed_params(target, k)
    assert abs(p.m1 - target.m1) == pytest.approx(1 / k)
    assert abs(p.lambda2 - target.lambda2) == pytest.approx(1 / k)
    assert 0 < p.alpha1 - target.alpha1 <= 1 / k + 1e-12
    assert p.alpha1 < 1


def test_fit_slope_exact_power_law():
    xs = [1, 2, 4, 8]
    slope, ci = fit_slope(xs, [3 * x**-0.5 for x in xs])
    assert slope == pytest.approx(-0.5)
    assert ci[0] == pytest.approx(-0.5) and ci[1] == pytest.approx(-0.5)


def test_report_serializes():
    rep = BoundReport("x", "rate", verdicts={"a": True, "b": False})
    assert rep.to_dict()["passed"] is False


def test_normal_sweep_small():
    rep = sweep_normal(ms=(1.0, 100.0))
    assert rep.passed
    assert rep.points[1]["distance"] < rep.points[0]["distance"]


def test_unknown_theorem():
    with pytest.raises(DomainError):
        rate_sweep("nope")
