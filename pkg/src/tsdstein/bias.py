"""The non-zero bias law of a TSD: density η(u)/Var(X), moments and sampler.

η⁺(u) = ∫_u^∞ y ν(dy) for u > 0 and η⁻(u) = ∫_{-∞}^u |y| ν(dy) for u < 0.
With Y independent of X having density η/Var(X),
Cov(X, f(X)) = Var(X) E f'(X + Y).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import integrate
from scipy.interpolate import PchipInterpolator
from scipy.special import gamma, gammainc, gammaincc

from .errors import DomainError, QuadratureError, SamplingError
from .model import TsdParams, cumulant_closed_form
from .sampling import SampleBatch, _generator


def _eta_tail(m, alpha, lam, a):
    # ∫_a^∞ y · m y^{-1-α} e^{-λy} dy = m λ^{α-1} Γ(1-α, λa)
    return m * lam ** (alpha - 1.0) * gammaincc(1.0 - alpha, lam * a) * gamma(1.0 - alpha)


def _second_lower(m, alpha, lam, a):
    # ∫_0^a y² ν(y) dy = m λ^{α-2} γ(2-α, λa)
    return m * lam ** (alpha - 2.0) * gammainc(2.0 - alpha, lam * a) * gamma(2.0 - alpha)


def _second_total(m, alpha, lam):
    return m * gamma(2.0 - alpha) / lam ** (2.0 - alpha)


def eta(params: TsdParams, u):
    """η(u): the right-tail integral for u > 0, the left-tail one for u < 0."""
    u = np.asarray(u, dtype=float)
    if np.any(u == 0):
        raise DomainError("eta is evaluated on u != 0 only")
    au = np.abs(u)
    out = np.where(u > 0, _eta_tail(*params.right, au), _eta_tail(*params.left, au))
    return float(out) if out.ndim == 0 else out


def eta_quadrature(params: TsdParams, u: float, tol: float = 1e-10) -> float:
    """Direct quadrature of ∫_u^∞ y ν(dy) (or the mirrored left integral)."""
    if u == 0:
        raise DomainError("eta is evaluated on u != 0 only")
    m, alpha, lam = params.right if u > 0 else params.left
    a = abs(u)
    val, err = integrate.quad(lambda y: m * y ** (-alpha) * math.exp(-lam * y), a, np.inf, epsabs=0.0, epsrel=tol)
    if err > 10 * tol * abs(val):
        raise QuadratureError("eta quadrature did not converge", val, err)
    return val


def bias_moment(params: TsdParams, n: int) -> float:
    """E Y^n = C_{n+2} / ((n+1) C_2)."""
    if n < 1:
        raise DomainError("moment order must be >= 1")
    return cumulant_closed_form(params, n + 2) / ((n + 1) * cumulant_closed_form(params, 2))


def _half_moment(m, alpha, lam, n, tol):
    # ∫_0^∞ u^n η_tail(u) du by adaptive quadrature; η is finite at 0.
    split = (n + 1.0) / lam
    total = err = 0.0
    for a, b in ((0.0, split), (split, np.inf)):
        v, e = integrate.quad(lambda x: x**n * _eta_tail(m, alpha, lam, x), a, b, epsabs=0.0, epsrel=tol, limit=200)
        total += v
        err += e
    return total, err


def bias_moment_quadrature(params: TsdParams, n: int, absolute: bool = False, tol: float = 1e-11) -> float:
    """∫ u^n f₁(u) du (or ∫ |u|^n f₁ with ``absolute``) by quadrature of η."""
    if n < 0:
        raise DomainError("moment order must be >= 0")
    right, e1 = _half_moment(*params.right, n, tol)
    left, e2 = _half_moment(*params.left, n, tol)
    sign = 1.0 if absolute else (-1.0) ** n
    if e1 + e2 > 1e3 * tol * (right + left):
        raise QuadratureError("bias moment quadrature did not converge", right + sign * left, e1 + e2)
    return (right + sign * left) / cumulant_closed_form(params, 2)


def mean_abs_bias(params: TsdParams) -> float:
    """The closed expression |C3|/(2 C2) used in the smooth-Wasserstein bound."""
    return abs(cumulant_closed_form(params, 3)) / (2.0 * cumulant_closed_form(params, 2))


def mean_abs_bias_exact(params: TsdParams) -> float:
    """E|Y| itself: (C3⁺ + C3⁻)/(2 C2), where C3± are the one-sided third moments of ν."""
    (m1, a1, l1), (m2, a2, l2) = params.right, params.left
    c3 = gamma(3 - a1) * m1 / l1 ** (3 - a1) + gamma(3 - a2) * m2 / l2 ** (3 - a2)
    return c3 / (2.0 * cumulant_closed_form(params, 2))


@dataclass(frozen=True)
class BiasDistribution:
    """Law with density f₁(u) = η(u)/C₂, with an exact CDF and tabulated inverse."""

    params: TsdParams
    points: int = 4000

    @property
    def normalizer(self) -> float:
        return cumulant_closed_form(self.params, 2)

    def eta_plus(self, u):
        return _eta_tail(*self.params.right, np.asarray(u, dtype=float))

    def eta_minus(self, u):
        return _eta_tail(*self.params.left, np.abs(np.asarray(u, dtype=float)))

    def pdf(self, u):
        u = np.asarray(u, dtype=float)
        au = np.abs(u)
        out = np.where(u >= 0, _eta_tail(*self.params.right, au), _eta_tail(*self.params.left, au))
        out = out / self.normalizer
        return float(out) if out.ndim == 0 else out

    def cdf(self, u):
        """Exact CDF from incomplete gamma functions."""
        u = np.asarray(u, dtype=float)
        au = np.abs(u)
        right, left = self.params.right, self.params.left
        left_mass = _second_total(*left)
        # u < 0: ∫_{|u|}^∞ y (y - |u|) ν⁻(dy)
        neg = _second_total(*left) - _second_lower(*left, au) - au * _eta_tail(*left, au)
        pos = left_mass + _second_lower(*right, au) + au * _eta_tail(*right, au)
        out = np.where(u < 0, neg, pos) / self.normalizer
        return float(out) if out.ndim == 0 else out

    def moment(self, n: int) -> float:
        return bias_moment(self.params, n)

    @cached_property
    def table(self) -> tuple[np.ndarray, np.ndarray]:
        """(u, F(u)) on a grid that is logarithmic near zero on both sides."""
        ends = []
        for m, alpha, lam in (self.params.right, self.params.left):
            a = 1.0 / lam
            while (_second_total(m, alpha, lam) - _second_lower(m, alpha, lam, a)) / self.normalizer > 1e-14:
                a *= 1.5
            ends.append(a)
        half = self.points // 2
        right = np.geomspace(1e-12, ends[0], half)
        left = -np.geomspace(1e-12, ends[1], half)[::-1]
        u = np.concatenate([left, [0.0], right])
        F = self.cdf(u)
        outside = F[0] + 1.0 - F[-1]
        if outside > 1e-6:
            raise SamplingError(f"bias tabulation leaves mass {outside:.3g} outside the grid")
        F, first = np.unique(np.maximum.accumulate(F), return_index=True)
        return u[first], F

    @cached_property
    def _inverse(self):
        u, F = self.table
        return PchipInterpolator(F, u, extrapolate=True)

    def ppf(self, q):
        return self._inverse(np.asarray(q, dtype=float))

    def sample(self, size: int, rng) -> SampleBatch:
        gen, seed, stream = _generator(rng)
        u, F = self.table
        q = gen.uniform(F[0], F[-1], int(size))
        return SampleBatch(self.ppf(q), f"bias{self.params.right + self.params.left}", seed, stream)


def sample_bias(params: TsdParams, size: int, rng) -> SampleBatch:
    """Inverse-transform variates of Y from the monotone-cubic inverse CDF."""
    return BiasDistribution(params).sample(size, rng)
