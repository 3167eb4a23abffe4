import json
import math

import pytest
from hypothesis import given, settings, strategies as st

from tsdstein.errors import DomainError
from tsdstein.model import (
    CumulantVector,
    StableParams,
    TsdParams,
    cumulant_closed_form,
    cumulant_quadrature,
    cumulants,
    default_grid,
    drift_b,
    levy_density,
    mean,
    parse_params,
    truncated_moment_closed_form,
    variance,
)

params_st = st.builds(
    TsdParams,
    st.floats(0.2, 3.0),
    st.floats(0.0, 0.9),
    st.floats(0.3, 4.0),
    st.floats(0.2, 3.0),
    st.floats(0.0, 0.9),
    st.floats(0.3, 4.0),
)


def test_bgd_cumulants(bgd):
    c = cumulants(bgd, 4)
    assert c[1] == pytest.approx(0.5)
    assert c[2] == pytest.approx(1.25)
    assert c[3] == pytest.approx(1.75)
    assert c[4] == pytest.approx(6.0 * (1 + 1 / 16))
    assert mean(bgd) == c[1] and variance(bgd) == c[2]


def test_cumulant_vector_is_one_based():
    v = CumulantVector((1.0, 2.0))
    assert v[1] == 1.0 and v[2] == 2.0
    with pytest.raises(IndexError):
        v[0]


@pytest.mark.parametrize("bad", [
    dict(m1=0), dict(m1=-1), dict(lambda2=0), dict(alpha1=1.0), dict(alpha2=-0.1), dict(m2=math.nan), dict(m1="1"),
])
def test_validation(bad):
    base = dict(m1=1, alpha1=0.3, lambda1=1, m2=1, alpha2=0.3, lambda2=1)
    base.update(bad)
    with pytest.raises(DomainError):
        TsdParams(**base)


def test_json_round_trip(kobol):
    assert TsdParams.from_json(kobol.to_json()) == kobol


@pytest.mark.parametrize("text", [
    '{"m1": 1}',
    '{"m1":1,"alpha1":0,"lambda1":1,"m2":1,"alpha2":0,"lambda2":2,"extra":3}',
    "not json",
])
def test_json_rejects_bad_input(text):
    with pytest.raises(DomainError):
        TsdParams.from_json(text)


def test_parse_params_picks_type():
    assert isinstance(parse_params({"m1": 1, "m2": 1, "alpha": 0.4}), StableParams)
    assert isinstance(parse_params(json.loads(TsdParams(1, 0, 1, 1, 0, 1).to_json())), TsdParams)


def test_subfamilies():
    assert TsdParams(1, 0, 2, 1, 0, 2).family == "SVGD"
    assert TsdParams(1, 0, 1, 1, 0, 2).family == "VGD"
    assert TsdParams(1, 0, 1, 2, 0, 2).family == "BGD"
    assert TsdParams(1, 0.3, 1, 1, 0.3, 2).family == "CGMY"
    assert TsdParams(1, 0.3, 1, 2, 0.3, 2).family == "KoBol"
    assert TsdParams(1, 0.3, 1, 2, 0.5, 2).family == "TSD"


def test_grid_has_27_distinct_points():
    grid = default_grid()
    assert len(grid) == 27 and len(set(grid)) == 27
    assert any(p.is_bgd for p in grid) and any(p.is_symmetric for p in grid)


def test_levy_density_values(kobol):
    u = 0.7
    assert levy_density(kobol, u) == pytest.approx(1.0 * u**-1.3 * math.exp(-0.7))
    assert levy_density(kobol, -u) == pytest.approx(2.0 * u**-1.3 * math.exp(-2.1))


@given(params_st, st.integers(1, 5))
@settings(max_examples=40, deadline=None)
def test_cumulant_quadrature_oracle(p, n):
    exact = cumulant_closed_form(p, n)
    assert cumulant_quadrature(p, n) == pytest.approx(exact, rel=1e-8, abs=1e-8)


@given(params_st, st.floats(0.1, 5.0), st.integers(1, 4))
@settings(max_examples=40, deadline=None)
def test_cumulants_scale_linearly(p, s, n):
    assert cumulant_closed_form(p.scaled(s), n) == pytest.approx(s * cumulant_closed_form(p, n), rel=1e-12)


@given(params_st)
@settings(max_examples=30, deadline=None)
def test_even_cumulants_positive(p):
    assert cumulant_closed_form(p, 2) > 0 and cumulant_closed_form(p, 4) > 0


def test_truncated_moment_limits(kobol):
    m, a, lam = kobol.right
    full = truncated_moment_closed_form(m, a, lam, 2, math.inf)
    assert full == pytest.approx(m * math.gamma(2 - a) / lam ** (2 - a))
    assert truncated_moment_closed_form(m, a, lam, 2, 1e-9) < 1e-9


def test_drift_is_truncated_first_moment(kobol):
    expected = sum(s * truncated_moment_closed_form(m, a, lam, 1, 1.0) for s, (m, a, lam) in ((1, kobol.right), (-1, kobol.left)))
    assert drift_b(kobol) == pytest.approx(expected, rel=1e-9)
