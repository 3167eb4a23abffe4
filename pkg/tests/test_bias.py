import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from tsdstein.bias import (
    BiasDistribution,
    bias_moment,
    bias_moment_quadrature,
    eta,
    eta_quadrature,
    mean_abs_bias,
    mean_abs_bias_exact,
    sample_bias,
)
from tsdstein.errors import DomainError
from tsdstein.model import TsdParams, default_grid
from tsdstein.sampling import RngStream

params_st = st.builds(
    TsdParams,
    st.floats(0.2, 3.0),
    st.floats(0.0, 0.9),
    st.floats(0.3, 4.0),
    st.floats(0.2, 3.0),
    st.floats(0.0, 0.9),
    st.floats(0.3, 4.0),
)


@given(params_st, st.floats(0.01, 5.0), st.booleans())
@settings(max_examples=40, deadline=None)
def test_eta_matches_quadrature(p, u, negative):
    u = -u if negative else u
    assert eta(p, u) == pytest.approx(eta_quadrature(p, u), rel=1e-8)


def test_eta_rejects_zero(bgd):
    with pytest.raises(DomainError):
        eta(bgd, 0.0)


@pytest.mark.parametrize("p", default_grid()[::4])
@pytest.mark.parametrize("n", [1, 2])
def test_moments_against_quadrature(p, n):
    assert bias_moment_quadrature(p, n) == pytest.approx(bias_moment(p, n), abs=1e-6)


def test_density_integrates_to_one(kobol):
    b = BiasDistribution(kobol)
    total = sum(integrate.quad(b.pdf, a, c, limit=200)[0] for a, c in ((-np.inf, 0), (0, np.inf)))
    assert total == pytest.approx(1.0, abs=1e-9)


def test_cdf_matches_integrated_density(kobol):
    b = BiasDistribution(kobol)
    for u in (-1.0, -0.2, 0.0, 0.3, 2.0):
        val = integrate.quad(b.pdf, -np.inf, min(u, 0.0))[0]
        if u > 0:
            val += integrate.quad(b.pdf, 0.0, u)[0]
        assert b.cdf(u) == pytest.approx(val, abs=1e-9)


def test_ppf_inverts_cdf(kobol):
    b = BiasDistribution(kobol)
    q = np.array([0.01, 0.3, 0.5, 0.9, 0.999])
    assert np.allclose(b.cdf(b.ppf(q)), q, atol=1e-6)


def test_sampled_moments(bgd):
    y = sample_bias(bgd, 400_000, RngStream(3)).values
    se = y.std(ddof=1) / math.sqrt(y.size)
    assert abs(y.mean() - bias_moment(bgd, 1)) < 4 * se
    assert abs(np.abs(y).mean() - mean_abs_bias_exact(bgd)) < 4 * se


def test_mean_abs_expressions_differ(bgd):
    # |C3|/(2 C2) equals E|Y| only when one tail is absent
    assert mean_abs_bias(bgd) == pytest.approx(0.7)
    assert mean_abs_bias_exact(bgd) == pytest.approx(0.9)
    assert bias_moment_quadrature(bgd, 1, absolute=True) == pytest.approx(0.9, rel=1e-9)
