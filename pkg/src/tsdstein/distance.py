"""Kolmogorov, Wasserstein-1 and dictionary lower bounds for d_{H3}."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DomainError
from .inversion import NumericLaw
from .sampling import SampleBatch
from .stein import TestFunction, h3_normalized, trig_function, TANH


@dataclass(frozen=True)
class DistanceEstimate:
    kind: str
    value: float
    error: float
    method: str
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.value < 0 or self.error < 0:
            raise DomainError("distances and error bars are nonnegative")

    def to_dict(self) -> dict:
        return asdict(self)


class _CdfCache:
    # Memoizes CDF evaluations of one law across the refinement passes.
    def __init__(self, law: NumericLaw):
        self.law = law
        self.values: dict[tuple[float, str], float] = {}

    def __call__(self, xs, side="right"):
        xs = np.atleast_1d(xs)
        todo = [x for x in xs if (float(x), side) not in self.values]
        if todo:
            for x, v in zip(todo, np.atleast_1d(self.law.cdf(np.array(todo), side=side))):
                self.values[(float(x), side)] = float(v)
        return np.array([self.values[(float(x), side)] for x in xs])


def kolmogorov(
    lawA: NumericLaw,
    lawB: NumericLaw,
    points: int = 512,
    levels: int = 3,
    caches: tuple[_CdfCache | None, _CdfCache | None] = (None, None),
) -> DistanceEstimate:
    """sup_x |F_A(x) - F_B(x)| on a grid refined x4 around the running argmax.

    Atoms of either law are evaluated from both sides. The error bar is the
    change of the difference between the argmax and its final neighbours plus
    the inversion tolerances.
    """
    fa = caches[0] or _CdfCache(lawA)
    fb = caches[1] or _CdfCache(lawB)
    if lawA.heavy_tailed or lawB.heavy_tailed:
        grid = np.union1d(lawA.grid(points), lawB.grid(points))
    else:
        grid = np.linspace(min(lawA.lo, lawB.lo), max(lawA.hi, lawB.hi), points)
    xs = grid
    diffs = fa(xs) - fb(xs)
    best_x, best = _argmax(xs, diffs)
    modulus = 0.0
    for _ in range(levels):
        i = int(np.searchsorted(xs, best_x))
        lo = xs[max(i - 1, 0)]
        hi = xs[min(i + 1, xs.size - 1)]
        xs = np.union1d(xs, np.linspace(lo, hi, 9))
        diffs = fa(xs) - fb(xs)
        best_x, best = _argmax(xs, diffs)
        # resolution error from the continuous parts only; atom jumps are exact
        cont = diffs - _steps(lawA, xs) + _steps(lawB, xs)
        j = int(np.searchsorted(xs, best_x))
        neigh = [cont[k] for k in (j - 1, j + 1) if 0 <= k < xs.size]
        modulus = max(abs(cont[j] - v) for v in neigh) if neigh else 0.0
    value = abs(best)
    at = best_x
    for loc in sorted({a for a, _ in lawA.atoms} | {a for a, _ in lawB.atoms}):
        for side in ("left", "right"):
            d = float(fa([loc], side)[0] - fb([loc], side)[0])
            if abs(d) > value:
                value, at = abs(d), loc
    tol = lawA.ctrl.tol + lawB.ctrl.tol
    return DistanceEstimate(
        "kolmogorov",
        float(value),
        float(modulus + 100 * tol),
        "gil-pelaez grid",
        {"argmax": float(at), "grid_points": int(xs.size)},
    )


def _steps(law, xs):
    out = np.zeros(xs.size)
    for loc, mass in law.atoms:
        out += mass * (xs >= loc)
    return out


def _argmax(xs, diffs):
    k = int(np.argmax(np.abs(diffs)))
    return xs[k], diffs[k]


def kolmogorov_samples(law: NumericLaw, batch: SampleBatch | np.ndarray) -> DistanceEstimate:
    """sup |F_n - F| between an empirical CDF and a law, at the jump points.

    Evaluated on at most 2048 order statistics; the error bar is the DKW
    half-width at δ = 1e-3.
    """
    values = np.sort(np.asarray(getattr(batch, "values", batch), dtype=float))
    n = values.size
    idx = np.unique(np.linspace(0, n - 1, min(n, 2048)).astype(int))
    F = law.cdf(values[idx])
    upper = (idx + 1) / n - F
    lower = F - idx / n
    value = float(max(upper.max(), lower.max(), 0.0))
    dkw = math.sqrt(math.log(2.0 / 1e-3) / (2.0 * n))
    return DistanceEstimate("kolmogorov", value, dkw, "empirical vs inverted cdf", {"n": n})


def dkw_band(n: int, delta: float = 1e-3) -> float:
    return math.sqrt(math.log(2.0 / delta) / (2.0 * n))


def _w1(x, y):
    x, y = np.sort(x), np.sort(y)
    if x.size != y.size:
        n = min(x.size, y.size)
        q = (np.arange(n) + 0.5) / n
        x, y = np.quantile(x, q), np.quantile(y, q)
    return float(np.mean(np.abs(x - y)))


def wasserstein1_empirical(a: SampleBatch | np.ndarray, b: SampleBatch | np.ndarray, blocks: int = 20) -> DistanceEstimate:
    """Mean |a_(i) - b_(i)| over sorted samples; error bar from block splits."""
    x = np.asarray(getattr(a, "values", a), dtype=float)
    y = np.asarray(getattr(b, "values", b), dtype=float)
    value = _w1(x, y)
    k = min(blocks, x.size // 50, y.size // 50)
    error = 0.0
    if k >= 2:
        # each block estimate carries the n^{-1/2} floor of a k-times smaller sample
        parts = [_w1(x[i::k], y[i::k]) for i in range(k)]
        error = float(np.std(parts, ddof=1) / math.sqrt(k))
    return DistanceEstimate("wasserstein1", value, error, "sorted-sample coupling", {"n": int(min(x.size, y.size))})


def h3_dictionary() -> list[TestFunction]:
    """sin(ωx+φ)/max(1,ω,ω²,ω³) for ω in {0.25,...,4}, φ in {0, π/2}, and tanh scaled into H3."""
    out = []
    for w in (0.25, 0.5, 1.0, 2.0, 4.0):
        for phase in (0.0, 0.5 * math.pi):
            out.append(trig_function(w, phase, amp=1.0 / max(1.0, w, w**2, w**3)))
    out.append(h3_normalized(TANH))
    return out


def _law_expect(law, h: TestFunction) -> tuple[float, float]:
    if isinstance(law, NumericLaw):
        if h.trig is not None:
            amp, w, th = h.trig
            return float(amp * np.imag(np.exp(1j * th) * law.source.scalar(w))), 0.0
        return float(law.expect(h)), 1e-6
    values = np.asarray(getattr(law, "values", law), dtype=float)
    hv = h(values)
    return float(np.mean(hv)), float(np.std(hv, ddof=1) / math.sqrt(values.size))


def smooth_h3_lower(lawA, lawB, dictionary: list[TestFunction] | None = None) -> DistanceEstimate:
    """max_h |E_A h - E_B h| over a dictionary inside the unit H3 ball.

    Laws may be :class:`NumericLaw` (trig expectations straight from the cf,
    others by quadrature on the inverted density) or sample batches.
    """
    dictionary = dictionary or h3_dictionary()
    best, err, arg = 0.0, 0.0, None
    for h in dictionary:
        if max(h.norms) > 1.0 + 1e-12:
            raise DomainError(f"{h.name} is outside the unit H3 ball")
        ea, sa = _law_expect(lawA, h)
        eb, sb = _law_expect(lawB, h)
        gap = abs(ea - eb)
        if gap >= best:
            best, err, arg = gap, sa + sb, h.name
    return DistanceEstimate("smooth_h3_lower", best, err, "dictionary maximum", {"argmax": arg})
