"""Hand-checkable values and structural identities across the modules."""

import math

import numpy as np
import pytest
from scipy.special import gamma, gammaincc

from tsdstein import bounds
from tsdstein.bias import BiasDistribution, eta, mean_abs_bias
from tsdstein.charfn import cf_compound_poisson, cf_ratio, cf_stable, cf_svgd, cf_tempered
from tsdstein.distance import kolmogorov, smooth_h3_lower, wasserstein1_empirical
from tsdstein.errors import InversionError
from tsdstein.inversion import NumericLaw, invert_cdf, law_of_Xt, tsd_law
from tsdstein.model import StableParams, TsdParams, cumulant_closed_form, drift_b, levy_density
from tsdstein.sampling import RngStream, sample_tempered
from tsdstein.stein import (
    levy_integral_quadrature,
    semigroup_apply,
    solve_stein,
    stein_apply,
    trig_function,
)


def bgd(m1, l1, m2, l2):
    return TsdParams(m1, 0.0, l1, m2, 0.0, l2)


def _gauss(x):
    return np.exp(-0.5 * np.asarray(x) ** 2)


# model


def test_levy_density_asymmetric_point():
    p = TsdParams(2, 0.5, 3, 1, 0.5, 1)
    assert levy_density(p, 0.5) == pytest.approx(2 * 0.5**-1.5 * math.exp(-1.5), rel=1e-14)


def test_first_cumulant_with_half_index():
    p = TsdParams(1, 0.5, 2, 1, 0.5, 1)
    assert cumulant_closed_form(p, 1) == pytest.approx(math.sqrt(math.pi) * (2**-0.5 - 1), rel=1e-12)


def test_drift_of_bilateral_gamma():
    expected = (1 - math.exp(-1)) - (1 - math.exp(-2)) / 2
    assert drift_b(bgd(1, 1, 1, 2)) == pytest.approx(expected, abs=1e-10)


# charfn


def test_svgd_values():
    assert cf_svgd(1.0, math.sqrt(2.0), 1.0) == pytest.approx(0.5, abs=1e-14)
    assert abs(cf_svgd(1e4, 1.0, 2.0) - math.exp(-2.0)) < 1e-3


def test_one_sided_stable_cf():
    # intensities must stay positive, so the empty left tail gets a negligible weight
    value = cf_stable(StableParams(1.0, 1e-300, 0.5), 1.0)
    assert value == pytest.approx(np.exp(gamma(-0.5) * np.exp(-0.25j * math.pi)), rel=1e-12)
    lam = 1e-8
    near = cf_tempered(TsdParams(1.0, 0.5, lam, 1e-12, 0.5, 1.0), 1.0)
    # tempering moves the exponent by about |Γ(-α)| λ^α, not by λ
    gap = abs(gamma(-0.5)) * lam**0.5
    assert abs(near - value) < 1.1 * gap * abs(value)
    assert abs(near - value) > 0.5 * gap * abs(value)


def test_compound_poisson_at_one():
    p = TsdParams(1, 0.3, 1, 2, 0.3, 3)
    z = np.array([-2.0, 0.7, 3.0])
    assert np.allclose(cf_compound_poisson(p, 1, z), np.exp(cf_tempered(p, z) - 1.0), atol=1e-14)


def test_ratio_for_large_t():
    p = TsdParams(1, 0.3, 1, 2, 0.3, 3)
    assert abs(cf_ratio(p, 50.0, 1.0) - cf_tempered(p, 1.0)) < 1e-10
    assert cf_ratio(p, 0.0, 1.3) == pytest.approx(1.0)


# inversion


def test_cdf_limits_and_symmetry():
    assert invert_cdf(cf_svgd(1.0, math.sqrt(2.0)), 50.0) == pytest.approx(1.0, abs=1e-6)
    assert invert_cdf(cf_tempered(TsdParams(1, 0.5, 1, 1, 0.5, 1)), 0.0) == pytest.approx(0.5, abs=1e-6)


def test_svgd_density_near_normal():
    law = NumericLaw.from_cf(cf_svgd(1e4, 1.0))
    assert law.pdf(0.0) == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-2)


def test_remainder_law_limits():
    p = TsdParams(1, 0.3, 1, 1, 0.3, 1)
    far, target = law_of_Xt(p, 50.0), tsd_law(p)
    x = np.linspace(-6, 6, 97)
    assert np.max(np.abs(far.cdf(x) - target.cdf(x))) < 1e-6
    assert abs(law_of_Xt(p, 1.0).mean()) < 1e-5


# sampling


def test_bilateral_gamma_sample_moments():
    n = 200_000
    x = sample_tempered(bgd(2, 1, 1, 3), n, RngStream(7)).values
    assert abs(x.mean() - (2 - 1 / 3)) < 3 * x.std() / math.sqrt(n)
    y = sample_tempered(bgd(1, 2, 1, 2), n, RngStream(8)).values
    c4 = cumulant_closed_form(bgd(1, 2, 1, 2), 4)
    se = math.sqrt((c4 + 2 * 0.5**2) / n)
    assert abs(y.var() - 0.5) < 3 * se


def test_symmetric_sample_skewness():
    n = 200_000
    x = sample_tempered(TsdParams(1, 0.5, 1, 1, 0.5, 1), n, RngStream(9)).values
    z = (x - x.mean()) / x.std()
    skew = float(np.mean(z**3))
    # the sample skewness standard error, using the exact kurtosis
    p = TsdParams(1, 0.5, 1, 1, 0.5, 1)
    kurt = cumulant_closed_form(p, 4) / cumulant_closed_form(p, 2) ** 2 + 3
    se = math.sqrt((15 + 6 * kurt) / n)
    assert abs(skew) < 5 * se


# bias


def test_eta_reference_points():
    assert eta(bgd(1, 1, 1, 1), 1.0) == pytest.approx(math.exp(-1), rel=1e-12)
    # one-sided tail with m=1, α=1/2, λ=2 at u=1/4
    p = TsdParams(1, 0.5, 2, 1, 0.5, 2)
    expected = gamma(0.5) * gammaincc(0.5, 0.5) / math.sqrt(2)
    assert eta(p, 0.25) == pytest.approx(expected, rel=1e-10)


def test_bias_mean_abs_closed_expression():
    assert mean_abs_bias(bgd(1, 1, 1, 2)) == pytest.approx(0.7, rel=1e-12)
    assert mean_abs_bias(TsdParams(1, 0.4, 1, 1, 0.4, 1)) == pytest.approx(0.0, abs=1e-14)


def test_bias_density_normalized():
    law = BiasDistribution(TsdParams(1, 0.7, 1, 2, 0.2, 3))
    u, F = law.table
    assert F[0] < 1e-6 and F[-1] > 1 - 1e-6


# stein


def test_stein_operator_reference_values():
    p = bgd(1, 1, 1, 2)
    assert stein_apply(p, lambda x: np.zeros_like(np.asarray(x, dtype=float)), 0.4) == 0.0
    sym = TsdParams(1, 0.5, 1, 1, 0.5, 1)
    assert abs(stein_apply(sym, _gauss, 0.0)) < 1e-10
    brute = -1.0 * _gauss(1.0) + levy_integral_quadrature(p, _gauss, 1.0)
    assert stein_apply(p, _gauss, 1.0) == pytest.approx(brute, abs=1e-8)


def test_semigroup_limits():
    p = TsdParams(1, 0.3, 1, 1, 0.3, 1)
    h = trig_function(1.0, 0.3)
    assert semigroup_apply(p, h, 0.0, 0.8) == pytest.approx(float(h(0.8)))
    far = semigroup_apply(p, h, 50.0, np.array([-1.0, 1.0]))
    assert abs(far[0] - far[1]) < 1e-6
    # the identity map: P_1 h(1) = e^{-1} + E X_(1), and the remainder is centred
    assert semigroup_apply(p, lambda v: v, 1.0, 1.0, route="density") == pytest.approx(math.exp(-1), abs=1e-5)


def test_semigroup_property():
    p = TsdParams(1, 0.3, 1, 2, 0.3, 3)
    amp, omega, phase = 1.0, 1.5, 0.2
    h = trig_function(omega, phase, amp)
    s, t = 0.4, 0.7
    x = np.array([-1.5, 0.0, 2.0])
    # P_s h is again a sinusoid, which lets P_t act on it through the density route
    phi = complex(cf_ratio(p, s, omega))
    inner = trig_function(omega * math.exp(-s), phase + np.angle(phi), amp * abs(phi))
    assert np.allclose(semigroup_apply(p, inner, 0.0, x), semigroup_apply(p, h, s, x, route="density"), atol=1e-6)
    lhs = semigroup_apply(p, h, s + t, x)
    rhs = semigroup_apply(p, inner, t, x, route="density")
    assert np.allclose(lhs, rhs, atol=1e-6)


def test_constant_function_has_zero_solution():
    one = trig_function(0.0, math.pi / 2)
    assert float(one(3.0)) == pytest.approx(1.0)
    sol = solve_stein(TsdParams(1, 0.3, 1, 2, 0.3, 3), one)
    assert np.allclose(sol(np.array([-2.0, 0.0, 2.0])), 0.0, atol=1e-12)


# distance


def test_cpd_atom_masses():
    p = bgd(1, 1, 1, 2)
    for n in (1, 2, 4):
        law = NumericLaw.from_cf(cf_compound_poisson(p, n))
        jump = law.cdf(0.0, side="right") - law.cdf(0.0, side="left")
        assert jump == pytest.approx(math.exp(-n), abs=1e-6)


def test_kolmogorov_triangle_inequality():
    a, b, c = tsd_law(bgd(1, 1, 1, 2)), tsd_law(bgd(1, 1, 1, 1)), tsd_law(TsdParams(1, 0.5, 1, 1, 0.5, 1))
    ab, bc, ac = kolmogorov(a, b), kolmogorov(b, c), kolmogorov(a, c)
    assert ac.value <= ab.value + bc.value + ab.error + bc.error + ac.error


def test_smooth_lower_bound_below_wasserstein():
    pa, pb = bgd(1, 1, 1, 2), bgd(1, 1, 1, 1)
    lower = smooth_h3_lower(tsd_law(pa), tsd_law(pb))
    xa = sample_tempered(pa, 200_000, RngStream(1)).values
    xb = sample_tempered(pb, 200_000, RngStream(2)).values
    w1 = wasserstein1_empirical(xa, xb)
    # every normalized dictionary member is 1-Lipschitz
    assert lower.value <= w1.value + 3 * w1.error + lower.error


# bounds


def test_bound_reference_values():
    assert bounds.bound_stable(TsdParams(1, 0.3, 0.2, 1, 0.3, 0.1), 1.0, 1.0) == pytest.approx(0.2**0.8 + 0.1**0.8)
    assert bounds.bound_vg_example(bgd(1, 1, 1, 2), 1.0, 1.0, 2.0) == pytest.approx(0.0, abs=1e-15)
    assert bounds.bound_normal_example(bgd(1, 1, 1, 1), 1.0) == pytest.approx(0.5)
    p = bgd(1, 1, 1, 2)
    for n in (1, 3, 50):
        assert bounds.bound_cpd(p, 2 * n) / bounds.bound_cpd(p, n) == pytest.approx(2**-0.2)


def test_sweep_reports_inversion_gap(monkeypatch):
    real = bounds.kolmogorov

    def flaky(a, b, *args, **kw):
        if a.source.kind == "svgd" and a.source.source[0] == 10.0:
            raise InversionError("forced failure")
        return real(a, b, *args, **kw)

    monkeypatch.setattr(bounds, "kolmogorov", flaky)
    rep = bounds.sweep_normal(ms=(1.0, 10.0, 100.0))
    gaps = [pt for pt in rep.points if pt.get("gap")]
    assert [pt["m"] for pt in gaps] == [10.0]
    assert gaps[0]["distance"] is None
    assert rep.verdicts["complete"] is False and not rep.passed
    assert rep.slope is not None and "inversion failed" in rep.notes[0]



def test_m_alpha_increases_on_convergent_range():
    values = [bounds.M_alpha(a) for a in (0.1, 0.2, 0.3, 0.4)]
    assert all(b > a for a, b in zip(values, values[1:]))


def test_halving_lambda_scales_stable_bound():
    a = 0.3
    full = bounds.bound_stable(TsdParams(1, a, 0.4, 1, a, 0.2), 1.0, 2.0)
    half = bounds.bound_stable(TsdParams(1, a, 0.2, 1, a, 0.1), 1.0, 2.0)
    assert half / full == pytest.approx(2 ** -(a + 0.5))
