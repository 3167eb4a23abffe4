"""Distribution functions recovered from characteristic functions.

CDFs come from the Gil-Pelaez formula applied to the absolutely continuous
part of a law (its cf minus the declared atoms); atoms are added back as
steps. Densities and expectations of smooth functions use an FFT grid.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import integrate
from scipy.special import sici

from .charfn import CharFn, cf_ratio, cf_tempered
from .errors import DomainError, InversionError
from .model import TsdParams


@dataclass(frozen=True)
class InversionControls:
    """Tolerances for Gil-Pelaez inversion.

    ``tol`` is the absolute error budget for a CDF value. The truncation
    frequency is the first doubling of ``t_start`` with |φ(T)|/T < ``decay``,
    capped at ``t_cap``; past the cap the tail is integrated by QAWF.
    """

    tol: float = 1e-9
    decay: float = 1e-10
    t_cap: float = 1e6
    limit: int = 400
    fft_points: int = 2**15
    width_sd: float = 20.0

    def __post_init__(self):
        if self.tol <= 0 or self.decay <= 0 or self.t_cap <= 0:
            raise DomainError("inversion controls must be positive")


DEFAULT_CONTROLS = InversionControls()


def _scale_of(cf: CharFn) -> float:
    """A length scale for the law: sd when finite, else 1/z where |φ(z)| = 1/2."""
    if cf.variance is not None and cf.variance > 0:
        return math.sqrt(cf.variance)
    z = 1.0
    for _ in range(200):
        if abs(cf(z)) < 0.5:
            break
        z *= 2.0
    lo, hi = 0.0, z
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if abs(cf(mid)) < 0.5:
            hi = mid
        else:
            lo = mid
    return 1.0 / hi


def truncation_frequency(cf: CharFn, ctrl: InversionControls = DEFAULT_CONTROLS) -> tuple[float, bool]:
    """Smallest doubling T with |φ_c(T)|/T < decay; second value is True when capped."""
    t = min(1.0 / _scale_of(cf), ctrl.t_cap)
    while t < ctrl.t_cap:
        if abs(cf.continuous(t)) / t < ctrl.decay:
            return t, False
        t *= 2.0
    return ctrl.t_cap, abs(cf.continuous(ctrl.t_cap)) / ctrl.t_cap >= ctrl.decay


def _quad(f, a, b, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        return integrate.quad(f, a, b, **kw)


def _continuous_cdf(cf: CharFn, x: float, T: float, capped: bool, ctrl: InversionControls):
    """Gil-Pelaez for the continuous part: returns (value, error estimate).

    With g the continuous-part cf and c = g(0) its mass,
    F_c(x) = c/2 - (1/π) ∫_0^∞ Im[e^{-izx} g(z)]/z dz. The constant c is
    subtracted from Re g on [0, T] and handled exactly through Si(Tx).
    """
    c = 1.0 - cf.atom_mass
    if c <= 0.0:
        return 0.0, 0.0

    g = cf.continuous_scalar

    def f_im(z):
        z = max(z, 1e-300)
        return g(z).imag / z

    def f_re(z):
        z = max(z, 1e-300)
        return (g(z).real - c) / z

    opts = dict(epsabs=0.1 * ctrl.tol, epsrel=0.0, limit=ctrl.limit)
    if x == 0.0:
        val, err = _quad(f_im, 0.0, T, **opts)
        si = 0.0
        if capped:
            tv, te = _quad(f_im, T, np.inf, **opts)
            val, err = val + tv, err + te
    else:
        a, e1 = _quad(f_im, 0.0, T, weight="cos", wvar=x, **opts)
        b, e2 = _quad(f_re, 0.0, T, weight="sin", wvar=x, **opts)
        val, err = a - b, e1 + e2
        si = c * sici(T * x)[0]
        if capped:
            # ∫_T^∞ [Im g cos(zx) - Re g sin(zx)]/z dz, both weights via QAWF
            def tail_c(z):
                return g(z).imag / z

            def tail_s(z):
                return g(z).real / z

            t1, e3 = _tail_fourier(tail_c, T, abs(x), "cos", ctrl)
            t2, e4 = _tail_fourier(tail_s, T, abs(x), "sin", ctrl)
            if x < 0:
                t2 = -t2
            val, err = val + t1 - t2, err + e3 + e4
    integral = val - si
    return c / 2.0 - integral / math.pi, err / math.pi


def _tail_fourier(f, T, w, kind, ctrl):
    # ∫_T^∞ f(z) trig(wz) dz, shifted to start at 0 for QAWF
    def shifted(u):
        return f(u + T)

    cs, sn = math.cos(w * T), math.sin(w * T)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        ic, ec = integrate.quad(shifted, 0.0, np.inf, weight="cos", wvar=w, epsabs=0.1 * ctrl.tol, limlst=200)
        is_, es = integrate.quad(shifted, 0.0, np.inf, weight="sin", wvar=w, epsabs=0.1 * ctrl.tol, limlst=200)
    # cos(w(u+T)) = cos(wu)cos(wT) - sin(wu)sin(wT); sin(w(u+T)) = sin(wu)cos(wT) + cos(wu)sin(wT)
    if kind == "cos":
        return ic * cs - is_ * sn, ec + es
    return is_ * cs + ic * sn, ec + es


def _atom_cdf(atoms, x, side):
    total = 0.0
    for loc, mass in atoms:
        if x > loc:
            total += mass
        elif x == loc:
            total += {"right": mass, "left": 0.0, "mid": 0.5 * mass}[side]
    return total


def invert_cdf(cf: CharFn, x: float, ctrl: InversionControls = DEFAULT_CONTROLS, side: str = "mid") -> float:
    """F(x) by Gil-Pelaez inversion, clamped to [0, 1].

    At an atom the default ``side="mid"`` gives (F(x) + F(x-))/2, the value
    the inversion integral itself converges to; "left"/"right" give the
    one-sided limits.
    """
    T, capped = truncation_frequency(cf, ctrl)
    value, err = _continuous_cdf(cf, float(x), T, capped, ctrl)
    if not np.isfinite(value) or err > 100 * ctrl.tol:
        raise InversionError(f"CDF inversion at x={x} did not converge", value, err)
    value += _atom_cdf(cf.atoms, float(x), side)
    return min(1.0, max(0.0, value))


def invert_pdf(cf: CharFn, x: float, ctrl: InversionControls = DEFAULT_CONTROLS) -> float:
    """Density (1/π) ∫_0^∞ Re[e^{-izx} φ(z)] dz, floored at zero."""
    if cf.atoms:
        raise DomainError(f"{cf.kind} law has atoms; its density is not defined")
    T, capped = truncation_frequency(cf, ctrl)
    x = float(x)
    opts = dict(epsabs=0.1 * ctrl.tol, epsrel=0.0, limit=ctrl.limit)

    def re(z):
        return cf.scalar(z).real

    def im(z):
        return cf.scalar(z).imag

    if x == 0.0:
        val, err = _quad(re, 0.0, T, **opts)
    else:
        a, e1 = _quad(re, 0.0, T, weight="cos", wvar=x, **opts)
        b, e2 = _quad(im, 0.0, T, weight="sin", wvar=x, **opts)
        val, err = a + b, e1 + e2
    if capped:
        raise InversionError("characteristic function decays too slowly for a density", val / math.pi, abs(cf(T)))
    if err > 100 * ctrl.tol:
        raise InversionError(f"density inversion at x={x} did not converge", val / math.pi, err / math.pi)
    return max(0.0, val / math.pi)


def _stable_window(cf: CharFn, scale: float, mass: float = 1e-4) -> float:
    # Truncation inequality P(|X| > 2/u) <= (1/u) ∫_{-u}^{u} (1 - Re φ) dz.
    u = 1.0 / scale
    for _ in range(400):
        zs = np.linspace(0.0, u, 65)
        bound = 2.0 / u * integrate.trapezoid(1.0 - np.real(cf(zs)), zs)
        if bound < mass:
            return 2.0 / u
        u *= 0.5
    raise InversionError("could not bound the support of the law", None, None)


@dataclass(frozen=True)
class FftGrid:
    """Tabulated density of the continuous part on an equispaced grid."""

    x: np.ndarray
    pdf: np.ndarray
    dx: float

    def expect(self, values) -> float:
        return float(integrate.trapezoid(values * self.pdf, dx=self.dx))


@dataclass(frozen=True)
class NumericLaw:
    """A law known through its characteristic function.

    ``lo``/``hi`` bracket the effective support and ``scale`` is a typical
    length (the sd when it exists).
    """

    source: CharFn
    lo: float
    hi: float
    scale: float
    ctrl: InversionControls = DEFAULT_CONTROLS
    heavy_tailed: bool = False
    meta: dict = field(default_factory=dict, compare=False)

    @classmethod
    def from_cf(cls, cf: CharFn, ctrl: InversionControls = DEFAULT_CONTROLS) -> "NumericLaw":
        scale = _scale_of(cf)
        if cf.variance is not None:
            mu = cf.mean or 0.0
            half = ctrl.width_sd * scale
            return cls(cf, mu - half, mu + half, scale, ctrl)
        half = _stable_window(cf, scale)
        return cls(cf, -half, half, scale, ctrl, heavy_tailed=True)

    @property
    def atoms(self):
        return self.source.atoms

    @cached_property
    def _truncation(self):
        return truncation_frequency(self.source, self.ctrl)

    def cdf(self, x, side: str = "right"):
        """CDF (right-continuous by default); vectorized over ``x``."""
        T, capped = self._truncation
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty_like(xs)
        for i, xi in enumerate(xs):
            val, err = _continuous_cdf(self.source, xi, T, capped, self.ctrl)
            if not np.isfinite(val) or err > 100 * self.ctrl.tol:
                raise InversionError(f"CDF inversion at x={xi} did not converge", val, err)
            out[i] = min(1.0, max(0.0, val + _atom_cdf(self.atoms, xi, side)))
        return float(out[0]) if np.ndim(x) == 0 else out

    def pdf(self, x):
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.array([invert_pdf(self.source, xi, self.ctrl) for xi in xs])
        return float(out[0]) if np.ndim(x) == 0 else out

    def grid(self, n: int = 512) -> np.ndarray:
        """Evaluation grid over the support; sinh-spaced for heavy tails."""
        if not self.heavy_tailed:
            return np.linspace(self.lo, self.hi, n)
        top = math.asinh(self.hi / self.scale)
        return self.scale * np.sinh(np.linspace(-top, top, n))

    @cached_property
    def fft(self) -> FftGrid:
        """Density of the continuous part on ``ctrl.fft_points`` points over [lo, hi]."""
        if self.heavy_tailed:
            raise DomainError("FFT tabulation needs a finite-variance law")
        n = self.ctrl.fft_points
        lo = self.lo
        dx = (self.hi - self.lo) / (n - 1)
        dz = 2.0 * math.pi / (n * dx)
        j = np.arange(n)
        # z_j = (j - n/2) dz spans [-π/dx, π/dx); p(x_k) = (1/2π) Σ_j g(z_j) e^{-i z_j x_k} dz
        z = (j - n // 2) * dz
        g = self.source.continuous(z)
        phase = np.exp(-1j * z * lo)
        spec = np.fft.fft(g * phase)
        # e^{-i z_j k dx} = e^{-2πi jk/n} (-1)^k
        sign = np.where(j % 2 == 0, 1.0, -1.0)
        pdf = np.real(spec * sign) * dz / (2.0 * math.pi)
        x = lo + j * dx
        return FftGrid(x, pdf, dx)

    def expect(self, func, shift: float = 0.0) -> float:
        """E func(shift + X): atoms exactly, continuous part on the FFT grid."""
        grid = self.fft
        total = grid.expect(func(shift + grid.x))
        for loc, mass in self.atoms:
            total += mass * float(func(shift + loc))
        return total

    def mean(self) -> float:
        return self.expect(lambda v: v)


def law_from_cf(cf: CharFn, ctrl: InversionControls = DEFAULT_CONTROLS) -> NumericLaw:
    return NumericLaw.from_cf(cf, ctrl)


def tsd_law(params: TsdParams, ctrl: InversionControls = DEFAULT_CONTROLS) -> NumericLaw:
    return NumericLaw.from_cf(cf_tempered(params), ctrl)


def law_of_Xt(params: TsdParams, t: float, ctrl: InversionControls = DEFAULT_CONTROLS) -> NumericLaw:
    """Law of the remainder X_(t) with cf φ_ts(z)/φ_ts(e^{-t}z); a unit atom at t = 0."""
    cf = cf_ratio(params, t)
    if t == 0:
        return NumericLaw(cf, -1.0, 1.0, 1.0, ctrl)
    return NumericLaw.from_cf(cf, ctrl)
