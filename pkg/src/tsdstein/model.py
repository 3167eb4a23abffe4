"""Tempered stable parameterizations, Lévy measures and cumulants.

A TSD(m1, a1, l1, m2, a2, l2) law is the infinitely divisible law with
characteristic function ``exp(∫ (e^{izu} - 1) ν(du))`` and Lévy density

    ν(u) = m1 u^{-1-a1} e^{-l1 u}        for u > 0,
    ν(u) = m2 |u|^{-1-a2} e^{-l2 |u|}    for u < 0.

All functions here are pure; parameter objects are immutable.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields, replace
from itertools import product

import numpy as np
from scipy import integrate
from scipy.special import gamma, gammainc

from .errors import DomainError, QuadratureError

_TSD_KEYS = ("m1", "alpha1", "lambda1", "m2", "alpha2", "lambda2")
_STABLE_KEYS = ("m1", "m2", "alpha")


@dataclass(frozen=True)
class TsdParams:
    """Six-parameter tempered stable law; right tail first, then left tail."""

    m1: float
    alpha1: float
    lambda1: float
    m2: float
    alpha2: float
    lambda2: float

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, bool) or not isinstance(value, (int, float, np.floating, np.integer)):
                raise DomainError(f"{f.name} must be a real number, got {value!r}")
            if not math.isfinite(value):
                raise DomainError(f"{f.name} must be finite")
            object.__setattr__(self, f.name, float(value))
        for name in ("m1", "m2", "lambda1", "lambda2"):
            if getattr(self, name) <= 0:
                raise DomainError(f"{name} must be positive")
        for name in ("alpha1", "alpha2"):
            if not 0.0 <= getattr(self, name) < 1.0:
                raise DomainError(f"{name} must lie in [0, 1)")

    @property
    def right(self) -> tuple[float, float, float]:
        return self.m1, self.alpha1, self.lambda1

    @property
    def left(self) -> tuple[float, float, float]:
        return self.m2, self.alpha2, self.lambda2

    @property
    def is_bgd(self) -> bool:
        return self.alpha1 == 0.0 and self.alpha2 == 0.0

    @property
    def is_symmetric(self) -> bool:
        return self.right == self.left

    def subfamilies(self) -> tuple[str, ...]:
        """Names of the nested sub-families this parameter point belongs to."""
        tags = []
        if self.alpha1 == self.alpha2:
            tags.append("KoBol")
            if self.m1 == self.m2:
                tags.append("CGMY")
        if self.is_bgd:
            tags.append("BGD")
            if self.m1 == self.m2:
                tags.append("VGD")
                if self.lambda1 == self.lambda2:
                    tags.append("SVGD")
        return tuple(tags)

    @property
    def family(self) -> str:
        tags = self.subfamilies()
        for name in ("SVGD", "VGD", "BGD", "CGMY", "KoBol"):
            if name in tags:
                return name
        return "TSD"

    def scaled(self, s: float) -> "TsdParams":
        """Same law with both intensities multiplied by ``s`` (the s-th convolution power)."""
        return replace(self, m1=self.m1 * s, m2=self.m2 * s)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "TsdParams":
        _check_keys(data, _TSD_KEYS, cls.__name__)
        return cls(**{k: data[k] for k in _TSD_KEYS})

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "TsdParams":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise DomainError(f"malformed params JSON: {exc}") from exc
        return cls.from_dict(data)


@dataclass(frozen=True)
class StableParams:
    """One-sided-index α-stable law S(m1, m2, α) with α in (0, 1)."""

    m1: float
    m2: float
    alpha: float

    def __post_init__(self):
        for f in fields(self):
            object.__setattr__(self, f.name, float(getattr(self, f.name)))
        if self.m1 <= 0 or self.m2 <= 0:
            raise DomainError("stable intensities must be positive")
        if not 0.0 < self.alpha < 1.0:
            raise DomainError("stable index must lie in (0, 1)")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "StableParams":
        _check_keys(data, _STABLE_KEYS, cls.__name__)
        return cls(**{k: data[k] for k in _STABLE_KEYS})


def _check_keys(data, keys, name):
    if not isinstance(data, dict):
        raise DomainError(f"{name} JSON must be an object")
    extra = set(data) - set(keys)
    missing = set(keys) - set(data)
    if extra:
        raise DomainError(f"unknown {name} fields: {sorted(extra)}")
    if missing:
        raise DomainError(f"missing {name} fields: {sorted(missing)}")


def parse_params(data: dict) -> TsdParams | StableParams:
    """Build whichever parameter type matches the keys of ``data``."""
    if isinstance(data, dict) and set(data) == set(_STABLE_KEYS):
        return StableParams.from_dict(data)
    return TsdParams.from_dict(data)


# ---------------------------------------------------------------------------
# Lévy measure
# ---------------------------------------------------------------------------


def levy_density(params: TsdParams | StableParams, u):
    """Lévy density ν(u); stable parameters give the untempered density."""
    u = np.asarray(u, dtype=float)
    if np.any(u == 0):
        raise DomainError("the Lévy density is singular at u = 0")
    if isinstance(params, StableParams):
        m1, a1, l1 = params.m1, params.alpha, 0.0
        m2, a2, l2 = params.m2, params.alpha, 0.0
    else:
        (m1, a1, l1), (m2, a2, l2) = params.right, params.left
    au = np.abs(u)
    with np.errstate(over="ignore", under="ignore"):
        pos = m1 * au ** (-1.0 - a1) * np.exp(-l1 * au)
        neg = m2 * au ** (-1.0 - a2) * np.exp(-l2 * au)
    out = np.where(u > 0, pos, neg)
    return float(out) if out.ndim == 0 else out


def tempering(params: TsdParams, u):
    """Tempering function q(u) = e^{-λ1 u} on u > 0 and e^{-λ2 |u|} on u < 0."""
    u = np.asarray(u, dtype=float)
    out = np.where(u > 0, np.exp(-params.lambda1 * np.abs(u)), np.exp(-params.lambda2 * np.abs(u)))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class LevyDensity:
    """Evaluable Lévy density with its provenance."""

    params: TsdParams | StableParams

    @property
    def tempered(self) -> bool:
        return isinstance(self.params, TsdParams)

    def __call__(self, u):
        return levy_density(self.params, u)


# ---------------------------------------------------------------------------
# Cumulants
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CumulantVector:
    values: tuple[float, ...]
    provenance: str = "closed-form"

    def __getitem__(self, n: int) -> float:
        """1-based access: ``cv[2]`` is the variance."""
        if n < 1 or n > len(self.values):
            raise IndexError(n)
        return self.values[n - 1]

    def __len__(self):
        return len(self.values)


def _tail_moment(m, alpha, lam, n):
    return gamma(n - alpha) * m / lam ** (n - alpha)


def cumulant_closed_form(params: TsdParams, n: int) -> float:
    """n-th cumulant Γ(n-a1) m1/l1^{n-a1} + (-1)^n Γ(n-a2) m2/l2^{n-a2}."""
    if n < 1:
        raise DomainError("cumulant order must be >= 1")
    right = _tail_moment(*params.right, n)
    left = _tail_moment(*params.left, n)
    return float(right + (-1) ** n * left)


def _half_line_power_integral(m, alpha, lam, n, tol, upper=math.inf):
    # ∫_0^upper m u^{n-1-α} e^{-λu} du with u = t^{1/(1-α)}, which removes the
    # u^{-α} endpoint singularity: the integrand becomes p t^{(n-1)p} e^{-λ t^p}.
    p = 1.0 / (1.0 - alpha)

    def f(t):
        return m * p * t ** ((n - 1) * p) * math.exp(-lam * t**p)

    t_upper = upper ** (1.0 - alpha) if math.isfinite(upper) else math.inf
    t_split = min(((n + 1.0) / lam) ** (1.0 - alpha), t_upper)
    total, err = 0.0, 0.0
    for a, b in ((0.0, t_split), (t_split, t_upper)):
        if b <= a:
            continue
        val, e = integrate.quad(f, a, b, epsabs=0.0, epsrel=tol * 1e-2, limit=400)
        total += val
        err += e
    if err > tol * max(abs(total), 1e-300):
        raise QuadratureError("tail-moment quadrature did not converge", total, err)
    return total, err


def cumulant_quadrature(params: TsdParams, n: int, tol: float = 1e-10) -> float:
    """n-th cumulant by direct quadrature of ∫ u^n ν(du); oracle for the closed form."""
    if n < 1:
        raise DomainError("cumulant order must be >= 1")
    if tol <= 0:
        raise DomainError("tol must be positive")
    right, e1 = _half_line_power_integral(*params.right, n, tol)
    left, e2 = _half_line_power_integral(*params.left, n, tol)
    value = right + (-1) ** n * left
    # Odd cumulants can cancel; judge accuracy against the summed magnitude.
    if e1 + e2 > tol * max(abs(right) + abs(left), 1e-300):
        raise QuadratureError("cumulant quadrature did not converge", value, e1 + e2)
    return float(value)


def cumulants(params: TsdParams, order: int = 4, method: str = "closed-form") -> CumulantVector:
    if method == "closed-form":
        vals = tuple(cumulant_closed_form(params, n) for n in range(1, order + 1))
    elif method == "quadrature":
        vals = tuple(cumulant_quadrature(params, n) for n in range(1, order + 1))
    else:
        raise ValueError(f"unknown method {method!r}")
    return CumulantVector(vals, method)


def mean(params: TsdParams) -> float:
    return cumulant_closed_form(params, 1)


def variance(params: TsdParams) -> float:
    return cumulant_closed_form(params, 2)


def drift_b(params: TsdParams, tol: float = 1e-10) -> float:
    """Truncated first moment b = ∫_{-1}^{1} u ν(du), by quadrature."""
    right, _ = _half_line_power_integral(*params.right, 1, tol, upper=1.0)
    left, _ = _half_line_power_integral(*params.left, 1, tol, upper=1.0)
    return float(right - left)


def truncated_moment_closed_form(m, alpha, lam, n, upper):
    """∫_0^upper m u^{n-1-α} e^{-λu} du via the regularized lower incomplete gamma."""
    a = n - alpha
    return float(m * gamma(a) * gammainc(a, lam * upper) / lam**a)


# ---------------------------------------------------------------------------
# Parameter grid used by property checks
# ---------------------------------------------------------------------------

GRID_M = (0.5, 1.0, 2.0)
GRID_ALPHA = (0.0, 0.3, 0.7)
GRID_LAMBDA = (0.5, 1.0, 3.0)


def default_grid() -> list[TsdParams]:
    """27 parameter points: the right tail runs over the full 3x3x3 product.

    The left tail is a cyclic shift of the right-tail indices, so the grid
    contains symmetric, bilateral-gamma and fully asymmetric points.
    """
    points = []
    for i, j, k in product(range(3), repeat=3):
        points.append(
            TsdParams(
                GRID_M[i], GRID_ALPHA[j], GRID_LAMBDA[k],
                GRID_M[(i + k) % 3], GRID_ALPHA[(j + i) % 3], GRID_LAMBDA[(k + j) % 3],
            )
        )
    return points
