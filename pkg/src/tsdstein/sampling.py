"""Random variate generation for tempered stable laws and their approximants."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import exp1, gamma, gammaincc

from .errors import DomainError, SamplingError
from .model import TsdParams, drift_b, truncated_moment_closed_form

MIN_ACCEPTANCE = 1e-4
DEFAULT_EPS = 1e-3
MAX_PIECES = 10_000


@dataclass(frozen=True)
class RngStream:
    """Counter-based stream: (seed, stream) fully determines the variates."""

    seed: int
    stream: int = 0

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise DomainError("seed must be a 64-bit unsigned integer")
        if int(self.stream) < 0:
            raise DomainError("stream id must be nonnegative")

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.stream),))
        return np.random.Generator(np.random.Philox(ss))

    def child(self, k: int) -> "RngStream":
        """A distinct stream derived from this one (for nested experiments)."""
        return RngStream(self.seed, self.stream * 1000003 + 1 + int(k))


@dataclass(frozen=True)
class SampleBatch:
    values: np.ndarray
    law: str
    seed: int | None = None
    stream: int | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise SamplingError(f"non-finite variates from {self.law}")

    def __len__(self):
        return len(self.values)

    def mean(self) -> float:
        return float(np.mean(self.values))

    def var(self) -> float:
        return float(np.var(self.values, ddof=1))


def _generator(rng):
    if isinstance(rng, RngStream):
        return rng.generator(), rng.seed, rng.stream
    if isinstance(rng, np.random.Generator):
        return rng, None, None
    raise TypeError("rng must be an RngStream or numpy Generator")


def _check_size(size):
    size = int(size)
    if size < 0:
        raise DomainError("size must be nonnegative")
    return size


# ---------------------------------------------------------------------------
# Exact samplers
# ---------------------------------------------------------------------------


def sample_bgd(params: TsdParams, size: int, rng) -> SampleBatch:
    """Bilateral gamma: G1 - G2 with G_i ~ Gamma(shape m_i, rate λ_i)."""
    if not params.is_bgd:
        raise DomainError("sample_bgd needs alpha1 = alpha2 = 0")
    size = _check_size(size)
    gen, seed, stream = _generator(rng)
    g1 = gen.gamma(params.m1, 1.0 / params.lambda1, size)
    g2 = gen.gamma(params.m2, 1.0 / params.lambda2, size)
    return SampleBatch(g1 - g2, f"BGD{params.right + params.left}", seed, stream)


def positive_stable(alpha: float, size: int, gen: np.random.Generator) -> np.ndarray:
    """Kanter's representation of S > 0 with E e^{-sS} = exp(-s^α)."""
    u = gen.uniform(0.0, math.pi, size)
    e = gen.standard_exponential(size)
    a = alpha
    left = np.sin(a * u) / np.sin(u) ** (1.0 / a)
    right = (np.sin((1.0 - a) * u) / e) ** ((1.0 - a) / a)
    return left * right


def tilting_acceptance(m: float, alpha: float, lam: float) -> float:
    """Acceptance probability E e^{-λS} = exp(m Γ(-α) λ^α) of one tilting step."""
    return math.exp(m * gamma(-alpha) * lam**alpha)


def tilting_pieces(m: float, alpha: float, lam: float) -> float:
    """Number of TSD(m/k) pieces that keeps each tilting step's acceptance >= 1/2."""
    if alpha == 0.0:
        return 1.0
    load = m * float(gamma(1.0 - alpha)) / alpha * lam**alpha
    return max(1.0, math.ceil(load / math.log(2.0)))


def _tilted_stable(c: float, alpha: float, lam: float, size: int, gen) -> np.ndarray:
    # S has Laplace exp(-c s^α); accept with probability e^{-λS}.
    scale = c ** (1.0 / alpha)
    out = np.empty(size)
    filled = 0
    acc = math.exp(-c * lam**alpha)
    while filled < size:
        need = size - filled
        batch = int(need / acc * 1.1) + 16
        s = scale * positive_stable(alpha, batch, gen)
        keep = s[gen.uniform(size=batch) < np.exp(-lam * s)]
        take = min(need, keep.size)
        out[filled:filled + take] = keep[:take]
        filled += take
    return out


def sample_tempered_onesided(m: float, alpha: float, lam: float, size: int, rng, split: bool = True) -> SampleBatch:
    """Spectrally positive TSD(m, α, λ) by exponential tilting of a stable law.

    With ``split`` the law is written as a sum of k i.i.d. TSD(m/k, α, λ)
    pieces, k chosen so each tilting step accepts with probability >= 1/2.
    Without it, an acceptance below 1e-4 raises :class:`SamplingError`.
    """
    if not 0.0 < alpha < 1.0:
        raise DomainError("alpha must lie in (0, 1)")
    if m <= 0 or lam <= 0:
        raise DomainError("m and lam must be positive")
    size = _check_size(size)
    gen, seed, stream = _generator(rng)
    c = -m * gamma(-alpha)
    load = c * lam**alpha
    if split:
        k = int(tilting_pieces(m, alpha, lam))
        if k > MAX_PIECES:
            raise SamplingError(f"tilting needs {k} pieces (alpha={alpha:g} is too small); use sample_truncation")
    else:
        if math.exp(-load) < MIN_ACCEPTANCE:
            raise SamplingError(
                f"tilting acceptance {math.exp(-load):.3g} below {MIN_ACCEPTANCE}; use sample_truncation"
            )
        k = 1
    pieces = _tilted_stable(c / k, alpha, lam, size * k, gen)
    values = pieces.reshape(size, k).sum(axis=1) if k > 1 else pieces
    return SampleBatch(values, f"TS+({m}, {alpha}, {lam})", seed, stream, {"pieces": k})


def _onesided(m, alpha, lam, size, gen):
    if alpha == 0.0:
        return gen.gamma(m, 1.0 / lam, size)
    return sample_tempered_onesided(m, alpha, lam, size, gen).values


def sample_tempered(params: TsdParams, size: int, rng, method: str = "auto") -> SampleBatch:
    """Right-tail variate minus an independent left-tail variate.

    ``method`` is "rejection" (exact), "truncation" (small-jump truncation at
    ``DEFAULT_EPS``) or "auto": rejection unless a tail needs more than
    ``MAX_PIECES`` tilting pieces, which happens only for tiny positive α.
    """
    size = _check_size(size)
    if method == "truncation":
        return sample_truncation(params, DEFAULT_EPS, size, rng)
    if method not in ("auto", "rejection"):
        raise ValueError(f"unknown method {method!r}")
    if method == "auto" and max(tilting_pieces(*params.right), tilting_pieces(*params.left)) > MAX_PIECES:
        return sample_truncation(params, DEFAULT_EPS, size, rng)
    gen, seed, stream = _generator(rng)
    right = _onesided(*params.right, size, gen)
    left = _onesided(*params.left, size, gen)
    return SampleBatch(right - left, f"TSD{params.right + params.left}", seed, stream)


# ---------------------------------------------------------------------------
# Small-jump truncation
# ---------------------------------------------------------------------------


def _upper_gamma_neg(alpha, x):
    # Γ(-α, x) for α in [0, 1), from Γ(a+1, x) = a Γ(a, x) + x^a e^{-x}
    if alpha == 0.0:
        return float(exp1(x))
    upper = gammaincc(1.0 - alpha, x) * gamma(1.0 - alpha)
    return float((x ** (-alpha) * math.exp(-x) - upper) / alpha)


def jump_rate(m, alpha, lam, eps):
    """ν((eps, ∞)) for one tail: m λ^α Γ(-α, λ eps)."""
    return m * lam**alpha * _upper_gamma_neg(alpha, lam * eps)


def _big_jumps(m, alpha, lam, eps, count, gen):
    # Rejection from the envelope u^{-1-α} on (eps, 1] plus e^{-λu} on (1, ∞).
    if eps < 1.0:
        w1 = -math.log(eps) if alpha == 0.0 else (eps ** (-alpha) - 1.0) / alpha
    else:
        w1 = 0.0
    lo2 = max(1.0, eps)
    w2 = math.exp(-lam * lo2) / lam
    p1 = w1 / (w1 + w2)
    out = np.empty(count)
    filled = 0
    while filled < count:
        need = count - filled
        batch = int(need * 1.5) + 16
        first = gen.uniform(size=batch) < p1
        v = gen.uniform(size=batch)
        u = np.empty(batch)
        if alpha == 0.0:
            u1 = eps * np.exp(-v * math.log(eps)) if eps < 1.0 else np.ones(batch)
        else:
            u1 = (eps ** (-alpha) - v * (eps ** (-alpha) - 1.0)) ** (-1.0 / alpha) if eps < 1.0 else np.ones(batch)
        u2 = lo2 + gen.standard_exponential(batch) / lam
        u[first] = u1[first]
        u[~first] = u2[~first]
        ratio = np.where(first, np.exp(-lam * u), u ** (-1.0 - alpha))
        keep = u[gen.uniform(size=batch) < ratio]
        take = min(need, keep.size)
        out[filled:filled + take] = keep[:take]
        filled += take
    return out


def truncation_bias(params: TsdParams, eps: float) -> float:
    """Variance lost by dropping jumps below eps: ∫_{|u|<eps} u² ν(du)."""
    return sum(truncated_moment_closed_form(m, a, lam, 2, eps) for m, a, lam in (params.right, params.left))


def sample_truncation(params: TsdParams, eps: float, size: int, rng) -> SampleBatch:
    """Compound Poisson of jumps with |u| > eps plus the small-jump mean as drift.

    The drift is b - ∫_{eps<=|u|<=1} u ν(du) with b from :func:`drift_b`,
    which equals the mean ∫_{|u|<eps} u ν(du) of the discarded jumps.
    """
    if eps <= 0:
        raise DomainError("eps must be positive")
    size = _check_size(size)
    gen, seed, stream = _generator(rng)
    rates = [jump_rate(*params.right, eps), jump_rate(*params.left, eps)]
    if sum(rates) < 1e-6:
        raise SamplingError(f"jump rate {sum(rates):.3g} is below 1e-6 at eps={eps}")
    mid = 0.0
    if eps < 1.0:
        mid = sum(
            sign * (truncated_moment_closed_form(m, a, lam, 1, 1.0) - truncated_moment_closed_form(m, a, lam, 1, eps))
            for sign, (m, a, lam) in ((1.0, params.right), (-1.0, params.left))
        )
    drift = drift_b(params) - mid
    values = np.full(size, drift)
    for sign, rate, tail in ((1.0, rates[0], params.right), (-1.0, rates[1], params.left)):
        counts = gen.poisson(rate, size)
        total = int(counts.sum())
        if total == 0:
            continue
        jumps = _big_jumps(*tail, eps, total, gen)
        owner = np.repeat(np.arange(size), counts)
        values += sign * np.bincount(owner, weights=jumps, minlength=size)
    meta = {"eps": eps, "variance_bias": truncation_bias(params, eps), "jump_rate": sum(rates)}
    return SampleBatch(values, f"TSD-trunc{params.right + params.left}", seed, stream, meta)


# ---------------------------------------------------------------------------
# Compound-Poisson approximant
# ---------------------------------------------------------------------------


def sample_cpd_approximant(params: TsdParams, n: int, size: int, rng) -> SampleBatch:
    """X_n = sum of N ~ Poisson(n) i.i.d. TSD(m/n) variates.

    Given N = k the sum is exactly TSD(k m1/n, α1, λ1, k m2/n, α2, λ2), so each
    Poisson count is sampled in one block.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    size = _check_size(size)
    gen, seed, stream = _generator(rng)
    counts = gen.poisson(n, size)
    values = np.zeros(size)
    for k in np.unique(counts):
        if k == 0:
            continue
        idx = np.flatnonzero(counts == k)
        law = params.scaled(k / n)
        right = _onesided(*law.right, idx.size, gen)
        left = _onesided(*law.left, idx.size, gen)
        values[idx] = right - left
    return SampleBatch(values, f"CPD{n}{params.right + params.left}", seed, stream, {"n": n})


def empirical_cf(values, z) -> np.ndarray:
    """Sample characteristic function mean(exp(i z X)) at each z."""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    x = np.asarray(values, dtype=float)
    return np.array([np.mean(np.exp(1j * zi * x)) for zi in z])
