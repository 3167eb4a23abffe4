"""Closed-form characteristic functions and their quadrature oracle.

Every characteristic function here is stored through its log (the
cumulant exponent), so powers such as φ^{1/n} are taken on the exponent and
never require choosing an n-th root branch.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate
from scipy.special import gamma

from .errors import DomainError, QuadratureError
from .model import StableParams, TsdParams, cumulant_closed_form


# Below this index expm1(αL)/α is replaced by its series; Γ(-α) itself overflows near 0.
_SMALL_ALPHA = 1e-8


def _tail_exponent(m, alpha, lam, w):
    # ∫_0^∞ (e^{iwu} - 1) m u^{-1-α} e^{-λu} du on the principal branch, written as
    # -m Γ(1-α) λ^α (e^{αL} - 1)/α with L = log(1 - iw/λ), which is continuous at α = 0.
    w = np.asarray(w, dtype=float)
    L = np.log1p(-1j * w / lam)
    if alpha == 0.0:
        return -m * L
    if alpha < _SMALL_ALPHA:
        ratio = L * (1.0 + alpha * L / 2.0 + alpha * alpha * L * L / 6.0)
    else:
        x = alpha * L
        half = np.sin(0.5 * x.imag)
        ratio = (np.expm1(x.real) * np.cos(x.imag) - 2.0 * half * half + 1j * np.exp(x.real) * np.sin(x.imag)) / alpha
    return -m * gamma(1.0 - alpha) * lam**alpha * ratio


def _tail_exponent_scalar(m, alpha, lam):
    # Scalar twin of _tail_exponent with the constants folded in (hot path of inversion).
    if alpha == 0.0:
        return lambda w: -m * cmath.log(complex(1.0, -w / lam))
    c = -m * float(gamma(1.0 - alpha)) * lam**alpha
    if alpha < _SMALL_ALPHA:
        def small(w):
            L = cmath.log(complex(1.0, -w / lam))
            return c * L * (1.0 + alpha * L / 2.0 + alpha * alpha * L * L / 6.0)

        return small
    return lambda w: c * _cexpm1(alpha * cmath.log(complex(1.0, -w / lam))) / alpha


def _cexpm1(w: complex) -> complex:
    # exp(w) - 1 without cancellation for small |w|
    a, b = w.real, w.imag
    s = math.sin(0.5 * b)
    return complex(math.expm1(a) * math.cos(b) - 2.0 * s * s, math.exp(a) * math.sin(b))


def tempered_exponent_scalar(params: TsdParams):
    """Scalar function w -> ψ(w) for a fixed parameter point."""
    right = _tail_exponent_scalar(*params.right)
    left = _tail_exponent_scalar(*params.left)
    return lambda w: right(w) + left(-w)


def tempered_exponent(params: TsdParams, z):
    """ψ(z) = log φ_ts(z), the sum of the right- and left-tail exponents."""
    z = np.asarray(z, dtype=float)
    return _tail_exponent(*params.right, z) + _tail_exponent(*params.left, -z)


def stable_exponent(params: StableParams, z):
    z = np.asarray(z, dtype=float)
    a = params.alpha
    az = np.abs(z) ** a
    phase = np.exp(-0.5j * np.pi * a * np.sign(z))
    # (-iz)^α = |z|^α e^{-iαπ/2 sign z}; (iz)^α is its conjugate.
    return gamma(-a) * (params.m1 * az * phase + params.m2 * az * np.conj(phase))


@dataclass(frozen=True)
class CharFn:
    """A characteristic function z -> φ(z), held through log φ.

    ``atoms`` lists (location, mass) pairs of the law's point masses and
    ``mean``/``variance`` are used as support hints (``None`` when infinite).
    """

    kind: str
    log_cf: Callable[[np.ndarray], np.ndarray]
    source: object = None
    atoms: tuple[tuple[float, float], ...] = ()
    mean: float | None = 0.0
    variance: float | None = None
    meta: dict = field(default_factory=dict, compare=False)
    log_cf_scalar: Callable[[float], complex] | None = field(default=None, compare=False)

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        out = np.exp(self.log_cf(z))
        return complex(out) if out.ndim == 0 else out

    def continuous(self, z):
        """Characteristic function of the absolutely continuous part (mass 1 - Σ atoms)."""
        z = np.asarray(z, dtype=float)
        out = np.exp(self.log_cf(z))
        for loc, mass in self.atoms:
            out = out - mass * np.exp(1j * z * loc)
        return out

    def scalar(self, z: float) -> complex:
        """φ(z) for a single float, through the scalar fast path when present."""
        if self.log_cf_scalar is None:
            return complex(np.exp(self.log_cf(np.asarray(float(z)))))
        return cmath.exp(self.log_cf_scalar(float(z)))

    def continuous_scalar(self, z: float) -> complex:
        out = self.scalar(z)
        for loc, mass in self.atoms:
            out -= mass * cmath.exp(1j * z * loc)
        return out

    @property
    def atom_mass(self) -> float:
        return float(sum(mass for _, mass in self.atoms))

    @property
    def std(self) -> float | None:
        return None if self.variance is None else math.sqrt(self.variance)


def cf_tempered(params: TsdParams, z=None):
    """φ_ts; returns the CharFn, or its value at ``z`` when given."""
    cf = CharFn(
        "tempered",
        lambda w: tempered_exponent(params, w),
        params,
        mean=cumulant_closed_form(params, 1),
        variance=cumulant_closed_form(params, 2),
        log_cf_scalar=tempered_exponent_scalar(params),
    )
    return cf if z is None else cf(z)


def cf_stable(params: StableParams, z=None):
    cf = CharFn(
        "stable",
        lambda w: stable_exponent(params, w),
        params,
        mean=None,
        variance=None,
        log_cf_scalar=lambda w: complex(stable_exponent(params, w)),
    )
    return cf if z is None else cf(z)


def cf_compound_poisson(params: TsdParams, n: int, z=None):
    """φ_n(z) = exp(n (exp(ψ(z)/n) - 1)), the compound-Poisson approximant."""
    if n < 1:
        raise DomainError("n must be >= 1")
    c1 = cumulant_closed_form(params, 1)
    c2 = cumulant_closed_form(params, 2)

    def log_cf(w):
        return n * np.expm1(tempered_exponent(params, w) / n)

    psi = tempered_exponent_scalar(params)

    cf = CharFn(
        f"compound_poisson({n})",
        log_cf,
        params,
        atoms=((0.0, math.exp(-n)),),
        mean=c1,
        variance=c2 + c1 * c1 / n,
        meta={"n": n},
        log_cf_scalar=lambda w: n * _cexpm1(psi(w) / n),
    )
    return cf if z is None else cf(z)


def cf_svgd(m: float, lam: float, z=None):
    """φ_sv(z) = (1 + z²λ²/(2m))^{-m}, the symmetric variance-gamma cf."""
    if m <= 0 or lam <= 0:
        raise DomainError("m and lam must be positive")
    cf = CharFn(
        "svgd",
        lambda w: -m * np.log1p(np.asarray(w, dtype=float) ** 2 * lam**2 / (2.0 * m)) + 0j,
        (m, lam),
        mean=0.0,
        variance=lam**2,
        log_cf_scalar=lambda w: complex(-m * math.log1p(w * w * lam * lam / (2.0 * m))),
    )
    return cf if z is None else cf(z)


def svgd_params(m: float, lam: float) -> TsdParams:
    """TSD point of SVGD(m, √(2m)/λ): the law whose cf is :func:`cf_svgd`."""
    rate = math.sqrt(2.0 * m) / lam
    return TsdParams(m, 0.0, rate, m, 0.0, rate)


def cf_normal(sigma: float, mu: float = 0.0, z=None):
    cf = CharFn(
        "normal",
        lambda w: 1j * mu * np.asarray(w, dtype=float) - 0.5 * sigma**2 * np.asarray(w, dtype=float) ** 2,
        (mu, sigma),
        mean=mu,
        variance=sigma**2,
        log_cf_scalar=lambda w: complex(-0.5 * sigma * sigma * w * w, mu * w),
    )
    return cf if z is None else cf(z)


def cf_ratio(params: TsdParams, t: float, z=None):
    """φ_t(z) = φ_ts(z)/φ_ts(e^{-t} z): the law of the self-decomposability remainder.

    For bilateral-gamma parameters the remainder is compound Poisson with an
    atom of mass e^{-t(m1+m2)} at zero.
    """
    if t < 0:
        raise DomainError("t must be >= 0")
    s = math.exp(-t)

    def log_cf(w):
        w = np.asarray(w, dtype=float)
        return tempered_exponent(params, w) - tempered_exponent(params, s * w)

    psi = tempered_exponent_scalar(params)
    atoms = ((0.0, 1.0),) if t == 0 else ()
    if t > 0 and params.is_bgd:
        atoms = ((0.0, math.exp(-t * (params.m1 + params.m2))),)
    c1 = cumulant_closed_form(params, 1)
    c2 = cumulant_closed_form(params, 2)
    cf = CharFn(
        f"ratio({t:g})",
        log_cf,
        params,
        atoms=atoms,
        mean=c1 * (1.0 - s),
        variance=c2 * (1.0 - s * s),
        meta={"t": t},
        log_cf_scalar=lambda w: psi(w) - psi(s * w),
    )
    return cf if z is None else cf(z)


# ---------------------------------------------------------------------------
# Quadrature oracle for the exponent ∫ (e^{izu} - 1) ν(du)
# ---------------------------------------------------------------------------


def _tail_exponent_quadrature(m, alpha, lam, w, tol):
    # Same u = t^{1/(1-α)} substitution as the cumulant oracle; the tail is
    # cut where e^{-λu} < 1e-16.
    p = 1.0 / (1.0 - alpha)
    u_max = 36.85 / lam

    def jac(t):
        # ν(u) du/dt in the t variable
        u = t**p
        return m * p * t ** (p - 1.0) * u ** (-1.0 - alpha) * math.exp(-lam * u)

    def re(t):
        u = t**p
        if u == 0.0:
            return 0.0
        return (math.cos(w * u) - 1.0) * jac(t)

    def im(t):
        u = t**p
        if u == 0.0:
            return 0.0
        return math.sin(w * u) * jac(t)

    # Oscillation: split at t-nodes corresponding to half periods in u.
    n_split = int(min(4000, max(8, abs(w) * u_max / math.pi)))
    u_nodes = np.linspace(0.0, u_max, n_split + 1)
    t_nodes = u_nodes ** (1.0 - alpha)
    # refine near 0 geometrically where the substitution is steep
    t_first = t_nodes[1]
    geo = t_first * np.geomspace(1e-8, 1.0, 12)
    t_nodes = np.unique(np.concatenate([[0.0], geo, t_nodes[1:]]))
    vr = vi = er = ei = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for a, b in zip(t_nodes[:-1], t_nodes[1:]):
            r, e1 = integrate.quad(re, a, b, epsabs=1e-3 * tol, epsrel=tol, limit=200)
            i, e2 = integrate.quad(im, a, b, epsabs=1e-3 * tol, epsrel=tol, limit=200)
            vr += r
            vi += i
            er += e1
            ei += e2
    return complex(vr, vi), er + ei


def exponent_quadrature(params: TsdParams, z: float, tol: float = 1e-10) -> complex:
    """∫ (e^{izu} - 1) ν_ts(du) by oscillatory quadrature; oracle for :func:`tempered_exponent`."""
    right, e1 = _tail_exponent_quadrature(*params.right, float(z), tol)
    left, e2 = _tail_exponent_quadrature(*params.left, -float(z), tol)
    value = right + left
    if e1 + e2 > 1e3 * tol * max(1.0, abs(value)):
        raise QuadratureError("exponent quadrature did not converge", value, e1 + e2)
    return value
