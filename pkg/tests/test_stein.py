import math

import numpy as np
import pytest

from tsdstein.errors import DomainError
from tsdstein.inversion import tsd_law
from tsdstein.model import TsdParams
from tsdstein.stein import (
    TANH,
    XGAUSS,
    default_dictionary,
    get_test_function,
    levy_integral,
    levy_integral_quadrature,
    semigroup_apply,
    solve_stein,
    spectral_expectation,
    stein_apply,
    stein_identity_residual,
    stein_solution_residual,
    trig_function,
    verify_derivative_bounds,
)
from tsdstein.charfn import cf_ratio, cf_tempered


def gauss(x):
    return np.exp(-0.5 * np.asarray(x) ** 2)


@pytest.mark.parametrize("x", [-1.5, 0.0, 0.7])
def test_levy_integral_against_quadpack(kobol, x):
    assert levy_integral(kobol, gauss, x)[0] == pytest.approx(levy_integral_quadrature(kobol, gauss, x), abs=1e-10)


def test_stein_operator_on_linear_function(bgd):
    # A(1)(x) = -x + C1
    x = np.array([-1.0, 0.0, 2.0])
    assert np.allclose(stein_apply(bgd, lambda v: np.ones_like(v), x), -x + 0.5, atol=1e-9)


@pytest.mark.parametrize("p", [TsdParams(1, 0, 1, 1, 0, 2), TsdParams(0.5, 0.7, 3.0, 1.0, 0.3, 1.0)])
def test_stein_identity_holds(p):
    assert abs(stein_identity_residual(p, gauss)) < 1e-6


def test_wrong_measure_breaks_identity(bgd):
    assert abs(stein_identity_residual(bgd, gauss, measure_params=TsdParams(1, 0, 1, 1, 0, 1))) > 1e-2


@pytest.mark.parametrize("h", default_dictionary(), ids=lambda h: h.name)
def test_declared_norms(h):
    assert h.check_norms()


def test_lookup():
    assert get_test_function("tanh") is TANH
    assert get_test_function("sin:2:0.5").trig == (1.0, 2.0, 0.5)
    with pytest.raises(DomainError):
        get_test_function("cosh")


def test_spectral_expectation_for_trig(kobol):
    h = trig_function(1.3, 0.4)
    a = np.array([0.0, 1.0])
    expected = [np.imag(np.exp(1j * (1.3 * ai + 0.4)) * cf_tempered(kobol, 1.3)) for ai in a]
    assert np.allclose(spectral_expectation(h, 0, a, cf_tempered(kobol)), expected, atol=1e-12)


def test_spectral_expectation_for_tanh(kobol):
    law = tsd_law(kobol)
    direct = law.expect(TANH.derivative(1), shift=0.3)
    assert spectral_expectation(TANH, 1, np.array([0.3]), cf_tempered(kobol))[0] == pytest.approx(direct, abs=1e-7)


def test_semigroup_routes_agree(kobol):
    h = trig_function(0.8)
    x = np.array([-1.0, 0.5])
    fourier = semigroup_apply(kobol, h, 0.6, x, route="fourier")
    density = semigroup_apply(kobol, h, 0.6, x, route="density")
    assert np.allclose(fourier, density, atol=1e-6)
    assert np.allclose(semigroup_apply(kobol, h, 0.0, x), h(x))
    far = semigroup_apply(kobol, h, 50.0, x)
    assert far[0] == pytest.approx(far[1], abs=1e-12)


@pytest.mark.parametrize("h", [TANH, XGAUSS, trig_function(1.0)], ids=lambda h: h.name)
def test_solution_solves_equation(bgd, h):
    res = stein_solution_residual(solve_stein(bgd, h), [-2.0, 0.0, 2.0])
    assert np.max(np.abs(res)) < 1e-4


def test_solution_derivative_matches_finite_differences(kobol):
    sol = solve_stein(kobol, TANH)
    x = np.array([-1.0, 0.5])
    assert np.allclose(sol.derivative(x, 1), sol.fd_derivative(x, 1), atol=1e-6)
    assert sol.derivative(np.zeros((2, 2)), 0).shape == (2, 2)


def test_derivative_bound_report(bgd):
    rep = verify_derivative_bounds(bgd, TANH, 1, points=32)
    assert rep.passed and rep.lipschitz is not None
    assert rep.to_dict()["bound"] == pytest.approx(TANH.norms[2] / 2)
    with pytest.raises(DomainError):
        verify_derivative_bounds(bgd, TANH, 3)
