"""Stein operator, semigroup and Stein-equation solution for TSD laws.

A f(x) = -x f(x) + ∫ u f(x+u) ν(du) satisfies E A f(X) = 0 for X ~ TSD. The
equation A f = h - E h(X) is solved by

    f_h(x) = -∫_0^1 E h'(x s + X_(-log s)) ds,

where X_(t) has cf φ(z)/φ(e^{-t} z). Expectations of h' against X_(t) are
taken in Fourier space whenever h has a known spectral form, so the solver
never inverts the nearly degenerate laws at small t.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable

import numpy as np
from scipy import integrate
from scipy.special import roots_jacobi, roots_legendre

from .charfn import cf_ratio, cf_tempered
from .errors import DomainError, QuadratureError
from .inversion import NumericLaw, law_of_Xt, tsd_law
from .model import TsdParams


# ---------------------------------------------------------------------------
# Test functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TestFunction:
    """h with analytic derivatives h, h', h'', h''' and their sup norms.

    ``trig = (A, ω, θ)`` marks h = A sin(ωx + θ). ``dhat`` is the Fourier
    transform z -> ∫ h'(x) e^{izx} dx of h', used for spectral expectations;
    it must be negligible beyond ``zmax``.
    """

    __test__ = False

    name: str
    derivs: tuple[Callable, ...]
    norms: tuple[float, ...]
    trig: tuple[float, float, float] | None = None
    dhat: Callable | None = field(default=None, compare=False)
    zmax: float = 0.0

    def __call__(self, x):
        return self.derivs[0](np.asarray(x, dtype=float))

    def derivative(self, k: int):
        if not 0 <= k < len(self.derivs):
            raise DomainError(f"{self.name} has no derivative of order {k}")
        return self.derivs[k]

    @property
    def spectral(self) -> bool:
        return self.trig is not None or self.dhat is not None

    def scaled(self, c: float, name: str | None = None) -> "TestFunction":
        derivs = tuple((lambda f: (lambda x: c * f(x)))(f) for f in self.derivs)
        trig = None if self.trig is None else (c * self.trig[0], self.trig[1], self.trig[2])
        dhat = None if self.dhat is None else (lambda d: (lambda z: c * d(z)))(self.dhat)
        return replace(
            self,
            name=name or f"{c:g}*{self.name}",
            derivs=derivs,
            norms=tuple(abs(c) * n for n in self.norms),
            trig=trig,
            dhat=dhat,
        )

    def check_norms(self, lo: float = -20.0, hi: float = 20.0, points: int = 10_000, slack: float = 1e-8) -> bool:
        x = np.linspace(lo, hi, points)
        return all(np.max(np.abs(f(x))) <= n + slack for f, n in zip(self.derivs, self.norms))


def trig_function(omega: float, phase: float = 0.0, amp: float = 1.0, name: str | None = None) -> TestFunction:
    """A sin(ωx + θ)."""

    def make(k):
        return lambda x: amp * omega**k * np.sin(omega * np.asarray(x, dtype=float) + phase + 0.5 * k * math.pi)

    return TestFunction(
        name or f"sin({omega:g}x+{phase:.3g})",
        tuple(make(k) for k in range(4)),
        tuple(abs(amp) * omega**k for k in range(4)),
        trig=(amp, omega, phase),
    )


def _sech2(x):
    return 1.0 / np.cosh(x) ** 2


def _tanh_dhat(z):
    z = np.asarray(z, dtype=float)
    az = np.abs(z)
    safe = np.where(az < 1e-8, 1.0, az)
    # π z / sinh(π z / 2), written to avoid overflow for large |z|
    val = 2.0 * math.pi * safe * np.exp(-0.5 * math.pi * safe) / -np.expm1(-math.pi * safe)
    return np.where(az < 1e-8, 2.0, val)


TANH = TestFunction(
    "tanh",
    (
        np.tanh,
        _sech2,
        lambda x: -2.0 * _sech2(x) * np.tanh(x),
        lambda x: 4.0 * _sech2(x) * np.tanh(x) ** 2 - 2.0 * _sech2(x) ** 2,
    ),
    (1.0, 1.0, 4.0 / (3.0 * math.sqrt(3.0)), 2.0),
    dhat=_tanh_dhat,
    zmax=28.0,
)


def _gauss(x):
    return np.exp(-0.5 * np.asarray(x, dtype=float) ** 2)


# sup |(x^3 - 3x) e^{-x^2/2}|, attained at x^2 = 3 - √6
_XG2 = float(abs((3 - math.sqrt(6)) ** 1.5 - 3 * math.sqrt(3 - math.sqrt(6))) * math.exp(-0.5 * (3 - math.sqrt(6))))

XGAUSS = TestFunction(
    "x*exp(-x^2/2)",
    (
        lambda x: x * _gauss(x),
        lambda x: (1.0 - x**2) * _gauss(x),
        lambda x: (x**3 - 3.0 * x) * _gauss(x),
        lambda x: (-(x**4) + 6.0 * x**2 - 3.0) * _gauss(x),
    ),
    (math.exp(-0.5), 1.0, _XG2, 3.0),
    dhat=lambda z: math.sqrt(2.0 * math.pi) * np.asarray(z, dtype=float) ** 2 * np.exp(-0.5 * np.asarray(z, dtype=float) ** 2),
    zmax=12.0,
)


def h3_normalized(h: TestFunction) -> TestFunction:
    """h divided by its largest declared sup norm, so it lies in the unit H3 ball."""
    return h.scaled(1.0 / max(h.norms), name=f"{h.name}/{max(h.norms):.4g}")


def default_dictionary() -> list[TestFunction]:
    """tanh, sin(ωx)/max(1, ω, ω², ω³) for ω in {0.5, 1, 2, 4}, and x e^{-x²/2} scaled."""
    out = [TANH]
    for w in (0.5, 1.0, 2.0, 4.0):
        out.append(trig_function(w, amp=1.0 / max(1.0, w, w**2, w**3)))
    out.append(h3_normalized(XGAUSS))
    return out


def get_test_function(name: str) -> TestFunction:
    """Look up "tanh", "xgauss" or "sin:<omega>" (optionally "sin:<omega>:<phase>")."""
    if name == "tanh":
        return TANH
    if name == "xgauss":
        return XGAUSS
    if name.startswith("sin:"):
        parts = name.split(":")[1:]
        omega = float(parts[0])
        phase = float(parts[1]) if len(parts) > 1 else 0.0
        return trig_function(omega, phase)
    raise DomainError(f"unknown test function {name!r}")


# ---------------------------------------------------------------------------
# Spectral expectations
# ---------------------------------------------------------------------------


def _z_nodes(zmax: float, amax: float, per_panel: int = 16):
    # Composite Gauss-Legendre on [0, zmax]; the phase z·a moves < 8 rad per panel.
    panels = max(8, math.ceil(zmax * max(1.0, amax) / 8.0))
    x, w = roots_legendre(per_panel)
    edges = np.linspace(0.0, zmax, panels + 1)
    half = 0.5 * np.diff(edges)
    mids = 0.5 * (edges[1:] + edges[:-1])
    z = (mids[:, None] + half[:, None] * x[None, :]).ravel()
    wz = (half[:, None] * w[None, :]).ravel()
    return z, wz


def spectral_expectation(h: TestFunction, k: int, a, cf: Callable, z_nodes=None) -> np.ndarray:
    """E h^{(k)}(a + Z) for each shift a, given the cf of Z (k >= 1 unless h is trig).

    Trig: A ω^k Im[e^{i(ωa + θ + kπ/2)} φ(ω)].
    Otherwise: (1/π) Re ∫_0^∞ D(-z) (iz)^{k-1} e^{iza} φ(z) dz with D the
    transform of h'.
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    if h.trig is not None:
        amp, w, th = h.trig
        phi = complex(cf(w))
        return amp * w**k * np.imag(np.exp(1j * (w * a + th + 0.5 * k * math.pi)) * phi)
    if h.dhat is None:
        raise DomainError(f"{h.name} has no spectral representation")
    if k < 1:
        raise DomainError("spectral expectations of h itself need the trig form")
    z, wz = z_nodes if z_nodes is not None else _z_nodes(h.zmax, float(np.max(np.abs(a))))
    weights = wz * h.dhat(-z) * (1j * z) ** (k - 1) * cf(z)
    out = np.empty(a.size)
    for start in range(0, a.size, 512):
        chunk = a[start:start + 512]
        out[start:start + 512] = np.real(np.exp(1j * np.outer(chunk, z)) @ weights) / math.pi
    return out


# ---------------------------------------------------------------------------
# Lévy-measure quadrature
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LevyNodes:
    """Nodes u_j and weights w_j with Σ w_j g(u_j) ≈ ∫ g(u) u ν(du)."""

    u: np.ndarray
    w: np.ndarray


def _tail_nodes(m, alpha, lam, n_near, per_panel, cutoff):
    # ∫_0^∞ g(u) m u^{-α} e^{-λu} du: Gauss-Jacobi on [0, 1] for the u^{-α} factor,
    # composite Gauss-Legendre on [1, cutoff/λ].
    x, w = roots_jacobi(n_near, 0.0, -alpha)
    u0 = 0.5 * (1.0 + x)
    w0 = w * 2.0 ** (alpha - 1.0) * m * np.exp(-lam * u0)
    upper = max(2.0, cutoff / lam)
    panels = math.ceil(upper - 1.0)
    xg, wg = roots_legendre(per_panel)
    edges = np.linspace(1.0, upper, panels + 1)
    half = 0.5 * np.diff(edges)
    mids = 0.5 * (edges[1:] + edges[:-1])
    u1 = (mids[:, None] + half[:, None] * xg[None, :]).ravel()
    w1 = (half[:, None] * wg[None, :]).ravel() * m * u1 ** (-alpha) * np.exp(-lam * u1)
    return np.concatenate([u0, u1]), np.concatenate([w0, w1])


def levy_nodes(params: TsdParams, n_near: int = 40, per_panel: int = 16, cutoff: float = 40.0) -> LevyNodes:
    ur, wr = _tail_nodes(*params.right, n_near, per_panel, cutoff)
    ul, wl = _tail_nodes(*params.left, n_near, per_panel, cutoff)
    return LevyNodes(np.concatenate([ur, -ul]), np.concatenate([wr, -wl]))


def levy_integral(params: TsdParams, f: Callable, x, nodes: LevyNodes | None = None) -> np.ndarray:
    """∫ u f(x+u) ν(du) for each x (vectorized)."""
    nodes = nodes or levy_nodes(params)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty(x.size)
    for start in range(0, x.size, 256):
        chunk = x[start:start + 256]
        out[start:start + 256] = f(chunk[:, None] + nodes.u[None, :]) @ nodes.w
    return out


def levy_integral_quadrature(params: TsdParams, f: Callable, x: float, tol: float = 1e-11) -> float:
    """Brute-force oracle for :func:`levy_integral` with QUADPACK's algebraic weight."""
    total = 0.0
    for sign, (m, alpha, lam) in ((1.0, params.right), (-1.0, params.left)):

        def g(u):
            return m * math.exp(-lam * u) * float(f(x + sign * u))

        near, e1 = integrate.quad(g, 0.0, 1.0, weight="alg", wvar=(-alpha, 0.0), epsabs=tol, epsrel=tol, limit=400)
        far, e2 = integrate.quad(lambda u: g(u) * u ** (-alpha), 1.0, np.inf, epsabs=tol, epsrel=tol, limit=400)
        if e1 + e2 > 1e3 * tol * max(1.0, abs(near + far)):
            raise QuadratureError("Lévy integral did not converge", near + far, e1 + e2)
        total += sign * (near + far)
    return total


# ---------------------------------------------------------------------------
# Stein operator and identity
# ---------------------------------------------------------------------------


def stein_apply(params: TsdParams, f: Callable, x, nodes: LevyNodes | None = None):
    """A f(x) = -x f(x) + ∫ u f(x+u) ν(du); vectorized over x."""
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    out = -xs * f(xs) + levy_integral(params, f, xs, nodes)
    return float(out[0]) if np.ndim(x) == 0 else out


def stein_identity_residual(
    params: TsdParams,
    f: Callable,
    measure_params: TsdParams | None = None,
    law: NumericLaw | None = None,
) -> float:
    """E[X f(X)] - E[∫ u f(X+u) ν(du)] with X ~ TSD(params).

    Expectations are trapezoid sums against the FFT-inverted density. The
    Lévy measure inside the integral may come from ``measure_params`` to
    show the residual is not zero for the wrong law.
    """
    law = law or tsd_law(params)
    grid = law.fft
    nodes = levy_nodes(measure_params or params)
    lhs = grid.expect(grid.x * f(grid.x))
    rhs = grid.expect(levy_integral(measure_params or params, f, grid.x, nodes))
    return lhs - rhs


# ---------------------------------------------------------------------------
# Semigroup
# ---------------------------------------------------------------------------


def _density_expect(law: NumericLaw, func: Callable, shifts: np.ndarray) -> np.ndarray:
    grid = law.fft
    keep = np.abs(grid.pdf) > 1e-15 * np.max(np.abs(grid.pdf))
    xk = grid.x[keep]
    wk = grid.pdf[keep] * grid.dx
    # trapezoid end corrections are negligible once the pdf has decayed
    out = np.empty(shifts.size)
    for start in range(0, shifts.size, 256):
        chunk = shifts[start:start + 256]
        out[start:start + 256] = func(chunk[:, None] + xk[None, :]) @ wk
    for loc, mass in law.atoms:
        out += mass * func(shifts + loc)
    return out


def semigroup_apply(params: TsdParams, h, t: float, x, route: str = "auto"):
    """P_t h(x) = E h(x e^{-t} + X_(t)); vectorized over x.

    ``route`` is "density" (FFT-inverted law of X_(t)), "fourier" (trig h
    only) or "auto" (Fourier when available).
    """
    if t < 0:
        raise DomainError("t must be >= 0")
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if t == 0:
        out = np.asarray(h(xs), dtype=float)
    else:
        shifts = xs * math.exp(-t)
        use_fourier = route == "fourier" or (route == "auto" and isinstance(h, TestFunction) and h.trig is not None)
        if use_fourier:
            if not (isinstance(h, TestFunction) and h.trig is not None):
                raise DomainError("the Fourier route needs a trig test function")
            out = spectral_expectation(h, 0, shifts, cf_ratio(params, t))
        elif route in ("density", "auto"):
            out = _density_expect(law_of_Xt(params, t), h, shifts)
        else:
            raise ValueError(f"unknown route {route!r}")
    return float(out[0]) if np.ndim(x) == 0 else out


# ---------------------------------------------------------------------------
# Stein solution
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SteinSolution:
    """f_h and its derivatives by Gauss-Legendre quadrature in s = e^{-t}."""

    params: TsdParams
    h: TestFunction
    nodes: int = 64
    error_budget: float = 1e-5

    @cached_property
    def _s_rule(self):
        x, w = roots_legendre(self.nodes)
        return 0.5 * (x + 1.0), 0.5 * w

    @cached_property
    def _ratio_cfs(self):
        s, _ = self._s_rule
        return [cf_ratio(self.params, -math.log(si)) for si in s]

    @cached_property
    def _laws(self):
        s, _ = self._s_rule
        return [law_of_Xt(self.params, -math.log(si)) for si in s]

    def derivative(self, x, r: int = 0):
        """f_h^{(r)}(x) = -∫_0^1 s^r E h^{(r+1)}(x s + X_(-log s)) ds."""
        if r + 1 >= len(self.h.derivs):
            raise DomainError(f"{self.h.name} lacks derivative {r + 1}")
        shape = np.shape(x)
        xs = np.asarray(x, dtype=float).ravel()
        s, w = self._s_rule
        total = np.zeros(xs.size)
        if self.h.spectral:
            amax = float(np.max(np.abs(xs))) if xs.size else 0.0
            for si, wi, cf in zip(s, w, self._ratio_cfs):
                z_nodes = None if self.h.trig is not None else _z_nodes(self.h.zmax, amax * si)
                total += wi * si**r * spectral_expectation(self.h, r + 1, xs * si, cf, z_nodes)
        else:
            dh = self.h.derivative(r + 1)
            for si, wi, law in zip(s, w, self._laws):
                total += wi * si**r * _density_expect(law, dh, xs * si)
        out = -total
        return float(out[0]) if not shape else out.reshape(shape)

    def __call__(self, x):
        return self.derivative(x, 0)

    def fd_derivative(self, x, r: int, step: float = 1e-3):
        """r-th derivative of f_h by Richardson-extrapolated central differences."""
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        if r == 0:
            return self.derivative(xs, 0)

        def diff(hs):
            if r == 1:
                return (self(xs + hs) - self(xs - hs)) / (2.0 * hs)
            if r == 2:
                return (self(xs + hs) - 2.0 * self(xs) + self(xs - hs)) / hs**2
            raise DomainError("finite differences are provided for r <= 2")

        return (4.0 * diff(step / 2.0) - diff(step)) / 3.0


def solve_stein(params: TsdParams, h: TestFunction, nodes: int = 64) -> SteinSolution:
    return SteinSolution(params, h, nodes)


def stein_solution_residual(solution: SteinSolution, x, law: NumericLaw | None = None) -> np.ndarray:
    """A f_h(x) - (h(x) - E h(X)) at each x; E h(X) from the inverted density."""
    law = law or tsd_law(solution.params)
    eh = law.expect(solution.h)
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    af = stein_apply(solution.params, solution, xs, levy_nodes(solution.params, cutoff=25.0))
    return np.atleast_1d(af) - (solution.h(xs) - eh)


@dataclass
class DerivativeBoundReport:
    h: str
    r: int
    observed: float
    bound: float
    slack: float
    lipschitz: float | None = None
    lipschitz_bound: float | None = None

    @property
    def passed(self) -> bool:
        ok = self.observed <= self.bound + self.slack
        if self.lipschitz is not None:
            ok = ok and self.lipschitz <= self.lipschitz_bound + self.slack
        return bool(ok)

    def to_dict(self) -> dict:
        return {
            "h": self.h,
            "r": self.r,
            "observed": self.observed,
            "bound": self.bound,
            "slack": self.slack,
            "lipschitz": self.lipschitz,
            "lipschitz_bound": self.lipschitz_bound,
            "passed": self.passed,
        }


def verify_derivative_bounds(
    params: TsdParams, h: TestFunction, r: int, points: int = 64, slack: float = 1e-3
) -> DerivativeBoundReport:
    """Compare max |f_h^{(r)}| on a grid with ‖h^{(r+1)}‖/(r+1).

    For r = 1 the report also carries the largest |f_h'(x) - f_h'(y)|/|x - y|
    over grid pairs, against ‖h'''‖/3.
    """
    if r not in (0, 1, 2):
        raise DomainError("r must be 0, 1 or 2")
    law = tsd_law(params)
    x = np.linspace(law.lo, law.hi, points)
    sol = solve_stein(params, h)
    vals = sol.fd_derivative(x, r)
    report = DerivativeBoundReport(h.name, r, float(np.max(np.abs(vals))), h.norms[r + 1] / (r + 1), slack)
    if r == 1:
        dx = x[:, None] - x[None, :]
        dv = vals[:, None] - vals[None, :]
        mask = dx != 0
        report.lipschitz = float(np.max(np.abs(dv[mask] / dx[mask])))
        report.lipschitz_bound = h.norms[3] / 3.0
    return report
