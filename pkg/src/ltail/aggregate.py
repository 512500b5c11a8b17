"""Weighted order-statistic sums: sampling, empirical statistics and oracles.

The aggregate of interest is S = c1*X(n) + c2*X(n-1) + ... + cn*X(1) where
X(n) >= ... >= X(1) are the descending order statistics of n iid risks.  The
sub-aggregate excluding the largest claim, c2*Y(n-1) + ... + cn*Y(1) over
n-1 iid risks, drives the second-order corrections; this module provides its
distribution exactly for n = 2, by seeded Monte Carlo, or through the
first-order tail equivalent, selected by an explicit method value.

Sampling is counter-mode: variate i is a pure function of (seed, i), so
results are independent of chunking, execution order and worker count.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence, Union

import numpy as np
from numpy.random import Generator, Philox

from .distributions import TailModel, truncated_first_moment
from .errors import InfiniteMomentError, UnsupportedError
from .numerics import DEFAULT_QUAD, QuadratureSpec, integrate

# Fixed sampling chunk size: part of the determinism contract (draw i lives in
# chunk i // CHUNK regardless of the requested count).
CHUNK = 1 << 19


class PrecisionWarning(UserWarning):
    """Empirical estimate is based on too few observations to be trusted."""


@dataclass(frozen=True)
class WeightScheme:
    """Weights applied to the descending order statistics of n iid risks."""

    raw: tuple
    normalized: tuple       # raw / c1, first entry 1
    c_tilde: float          # c2'/(1 + c2') for the normalized second weight

    @property
    def n(self) -> int:
        return len(self.raw)

    @property
    def c1(self) -> float:
        return self.raw[0]

    @property
    def c2(self) -> float:
        """Second entry of the normalized weight vector (0 when n == 1)."""
        return self.normalized[1] if self.n > 1 else 0.0


def make_weights(raw: Sequence[float]) -> WeightScheme:
    """Validate a weight vector and derive its normalized form.

    Requires c1 > 0 and c2 > 0 with any further weights nonnegative.  The
    degenerate single-risk case n = 1 is accepted for sanity checks; the
    sub-aggregate is then identically zero.
    """
    vals = tuple(float(v) for v in raw)
    if len(vals) == 0:
        raise ValueError("weights must be nonempty")
    if vals[0] <= 0.0:
        raise ValueError("weight on the largest claim must be positive")
    if len(vals) >= 2 and vals[1] <= 0.0:
        raise ValueError("weight on the second-largest claim must be positive")
    if any(v < 0.0 for v in vals[2:]):
        raise ValueError("weights beyond the second must be nonnegative")
    normalized = tuple(v / vals[0] for v in vals)
    c2 = normalized[1] if len(vals) > 1 else 0.0
    c_tilde = c2 / (1.0 + c2)
    return WeightScheme(vals, normalized, c_tilde)


# ---------------------------------------------------------------------------
# F_n evaluation method

@dataclass(frozen=True)
class MonteCarloFn:
    """Monte Carlo backend for the sub-aggregate distribution."""

    count: int
    seed: int

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("count must be positive")


FnMethod = Union[str, MonteCarloFn]   # "exact_n2" | "asymptotic" | MonteCarloFn


def _check_method(method: FnMethod) -> FnMethod:
    if isinstance(method, MonteCarloFn):
        return method
    if method in ("exact_n2", "asymptotic"):
        return method
    raise UnsupportedError(f"unknown F_n method {method!r}")


# ---------------------------------------------------------------------------
# seeded sampling

@dataclass
class EmpiricalSummary:
    """Sorted sample digest of a weighted order-statistic sum."""

    values: np.ndarray          # ascending
    seed: int
    sample_count: int = field(default=0)

    def __post_init__(self):
        if self.sample_count == 0:
            self.sample_count = len(self.values)


def _uniform_chunk(seed: int, chunk_index: int, rows: int, cols: int) -> np.ndarray:
    key = np.array([np.uint64(seed & 0xFFFFFFFFFFFFFFFF),
                    np.uint64(chunk_index)], dtype=np.uint64)
    gen = Generator(Philox(key=key))
    u = gen.random((rows, cols))
    # keep strictly inside (0, 1) for quantile transforms
    eps = 2.0 ** -53
    return np.clip(u, eps, 1.0 - eps)


def _sample_weighted(model: TailModel, weights: Sequence[float], count: int,
                     seed: int) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    n = len(w)
    out = np.empty(count, dtype=float)
    pos = 0
    for chunk_index in range(0, -(-count // CHUNK)):
        rows = min(CHUNK, count - pos)
        u = _uniform_chunk(seed, chunk_index, CHUNK, n)[:rows]
        x = model.quantile(u)
        x.sort(axis=1)
        out[pos:pos + rows] = x[:, ::-1] @ w
        pos += rows
    return out


def sample_lstat(model: TailModel, w: Union[WeightScheme, Sequence[float]],
                 count: int, seed: int) -> EmpiricalSummary:
    """Draw ``count`` replicates of the weighted order-statistic sum.

    Accepts a raw weight sequence as an escape hatch (e.g. a zero second
    weight to sample the plain maximum in tests); only the leading weight is
    then required to be positive.
    """
    if count < 1:
        raise ValueError("count must be positive")
    if isinstance(w, WeightScheme):
        raw = w.raw
    else:
        raw = tuple(float(v) for v in w)
        if not raw or raw[0] <= 0.0 or any(v < 0.0 for v in raw[1:]):
            raise ValueError("invalid raw weights")
    values = _sample_weighted(model, raw, count, seed)
    values.sort()
    return EmpiricalSummary(values=values, seed=seed)


def sample_sub_aggregate(model: TailModel, w: WeightScheme, count: int,
                         seed: int) -> EmpiricalSummary:
    """Sample the normalized sub-aggregate c2'*Y(n-1) + ... + cn'*Y(1)."""
    if w.n < 2:
        raise UnsupportedError("sub-aggregate sampling needs n >= 2")
    values = _sample_weighted(model, w.normalized[1:], count, seed)
    values.sort()
    return EmpiricalSummary(values=values, seed=seed)


@lru_cache(maxsize=8)
def _cached_sub_aggregate(model: TailModel, w: WeightScheme,
                          count: int, seed: int) -> EmpiricalSummary:
    return sample_sub_aggregate(model, w, count, seed)


# ---------------------------------------------------------------------------
# empirical statistics

def empirical_tail(s: EmpiricalSummary, x: float) -> tuple:
    """(fraction of sample > x, Wilson 95% low, Wilson 95% high)."""
    n = s.sample_count
    k = n - np.searchsorted(s.values, x, side="right")
    phat = k / n
    z = 1.959963984540054
    denom = 1.0 + z * z / n
    center = (phat + z * z / (2.0 * n)) / denom
    half = z * math.sqrt(phat * (1.0 - phat) / n + z * z / (4.0 * n * n)) / denom
    return (phat, max(0.0, center - half), min(1.0, center + half))


def _quantile_index(p: float, n: int) -> int:
    # lower-order-statistic convention: value at 1-based index ceil(p * n)
    return min(n - 1, max(0, math.ceil(p * n) - 1))


def empirical_var(s: EmpiricalSummary, p: float) -> float:
    """Empirical quantile (lower order statistic at ceil(p * count))."""
    if not 0.0 <= p < 1.0:
        raise ValueError("empirical_var requires p in [0, 1)")
    return float(s.values[_quantile_index(p, s.sample_count)])


def empirical_cte(s: EmpiricalSummary, p: float) -> float:
    """Mean of sample values strictly above the empirical p-quantile."""
    q = empirical_var(s, p)
    idx = np.searchsorted(s.values, q, side="right")
    tail = s.values[idx:]
    if len(tail) < 100:
        warnings.warn(f"empirical_cte at p={p} rests on {len(tail)} exceedances",
                      PrecisionWarning, stacklevel=2)
    if len(tail) == 0:
        return q
    return float(tail.mean())


def empirical_tcte(s: EmpiricalSummary, p: float) -> float:
    """Average of the conditional tail expectation over levels above p.

    Uses the order-statistic identity: the average of CTE_q over q in (p, 1)
    equals a log-weighted mean of the upper order statistics.
    """
    n = s.sample_count
    k = _quantile_index(p, n)
    tail = s.values[k:]
    # u_i grid of the upper order statistics, weights ln((1-p)/(1-u))
    u = (np.arange(k, n) + 0.5) / n
    wts = np.log((1.0 - p) / (1.0 - u))
    return float((tail * wts).sum() / n / (1.0 - p))


def bootstrap_tail_ci(s: EmpiricalSummary, p: float, statistic: str = "var",
                      reps: int = 200, seed: int = 7, level: float = 0.95) -> tuple:
    """Bootstrap CI for the empirical p-quantile or tail mean.

    Uses a Poisson bootstrap restricted to the upper order statistics (the
    only ones a tail statistic depends on); the weight total of the bulk is
    drawn as a single Poisson variate.
    """
    n = s.sample_count
    k = _quantile_index(p, n)
    m0 = n - k
    top = max(4 * m0, 1000)
    top = min(top, n)
    tail_vals = s.values[n - top:][::-1].copy()   # descending
    gen = Generator(Philox(key=np.array([seed, 0xB007], dtype=np.uint64)))
    stats = np.empty(reps)
    for r in range(reps):
        wts = gen.poisson(1.0, size=top)
        bulk = gen.poisson(n - top)
        total = int(wts.sum()) + bulk
        rank = total - math.ceil(p * total) + 1    # exceedance rank from top
        csum = np.cumsum(wts)
        j = int(np.searchsorted(csum, rank))
        if j >= top:
            j = top - 1
        if statistic == "var":
            stats[r] = tail_vals[j]
        elif statistic == "cte":
            vsum = np.cumsum(wts * tail_vals)
            cnt = csum[j - 1] if j > 0 else 0
            val = vsum[j - 1] if j > 0 else 0.0
            stats[r] = val / cnt if cnt > 0 else tail_vals[j]
        else:
            raise ValueError(f"unknown statistic {statistic!r}")
    lo, hi = np.quantile(stats, [(1 - level) / 2, (1 + level) / 2])
    return float(lo), float(hi)


# ---------------------------------------------------------------------------
# sub-aggregate distribution facilities

def moment_s_prev(model: TailModel, w: WeightScheme, j: int,
                  method: FnMethod = "exact_n2") -> float:
    """E[(sub-aggregate)**j] in normalized weights.

    Closed form for n = 2 (the sub-aggregate is c2'*X); Monte Carlo over
    order statistics of n-1 iid draws otherwise.
    """
    if j == 0:
        return 1.0
    if j >= model.alpha:
        raise InfiniteMomentError(f"sub-aggregate moment {j} is infinite")
    if w.n == 1:
        return 0.0
    if w.n == 2:
        return w.c2 ** j * model.raw_moment(j)
    method = _check_method(method)
    if not isinstance(method, MonteCarloFn):
        raise UnsupportedError(
            "sub-aggregate moments for n > 2 need a Monte Carlo method")
    s = _cached_sub_aggregate(model, w, method.count, method.seed)
    return float(np.mean(s.values ** j))


def survival_fn(model: TailModel, w: WeightScheme, x: float,
                method: FnMethod = "exact_n2") -> float:
    """Tail probability of the normalized sub-aggregate at x."""
    if w.n == 1:
        return 0.0 if x >= 0.0 else 1.0
    method = _check_method(method)
    if method == "exact_n2":
        if w.n != 2:
            raise UnsupportedError("exact_n2 requires n = 2")
        return float(model.survival(x / w.c2))
    if method == "asymptotic":
        return min(1.0, (w.n - 1) * w.c2 ** model.alpha * float(model.survival(x)))
    s = _cached_sub_aggregate(model, w, method.count, method.seed)
    return empirical_tail(s, x)[0]


def mu_f(model: TailModel, w: WeightScheme, x: float,
         mode: str = "definition", fn_method: FnMethod = "exact_n2",
         spec: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Scale function of the sub-aggregate's second-order contribution.

    ``definition`` mode evaluates the defining expression (the sub-aggregate
    tail for alpha < 1, else the truncated first moment over x); the
    ``asymptotic`` mode uses its first-order equivalent.
    """
    if not x > 0.0:
        raise ValueError("mu_f requires x > 0")
    alpha = model.alpha
    n, c2 = w.n, w.c2
    if n == 1:
        return 0.0
    if mode == "asymptotic":
        if alpha < 1.0:
            return (n - 1) * c2 ** alpha * float(model.survival(x))
        if alpha == 1.0 or not math.isfinite(model.mean):
            return (n - 1) * c2 * model.truncated_first_moment(x) / x
        return moment_s_prev(model, w, 1, fn_method) / x
    if mode != "definition":
        raise UnsupportedError(f"unknown mu_f mode {mode!r}")
    fn_method = _check_method(fn_method)
    if alpha < 1.0:
        return survival_fn(model, w, x, fn_method)
    if fn_method == "exact_n2":
        if w.n != 2:
            raise UnsupportedError("exact_n2 requires n = 2")
        return c2 * model.truncated_first_moment(x / c2, spec) / x
    if isinstance(fn_method, MonteCarloFn):
        s = _cached_sub_aggregate(model, w, fn_method.count, fn_method.seed)
        vals = s.values
        return float(vals[vals <= x].sum() / len(vals) / x)
    raise UnsupportedError("definition-mode mu_f needs exact_n2 or Monte Carlo")


def v_alpha(model: TailModel, w: WeightScheme, x: float,
            fn_method: FnMethod = "exact_n2",
            spec: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Integral of ((1-u/x)**-alpha - 1) over the sub-aggregate on (0, c~x).

    Evaluated for n = 2 through the partial-integration form
    alpha/x * int_0^{c~x} Fbar_n(u) (1-u/x)^{-(alpha+1)} du
    + (1 - (1-c~)^{-alpha}) * Fbar_n(c~x), split at the kink where the
    sub-aggregate support starts; Monte Carlo otherwise.
    """
    if not x > 0.0:
        raise ValueError("v_alpha requires x > 0")
    if w.n == 1:
        return 0.0
    alpha, ct = model.alpha, w.c_tilde
    upper = ct * x
    fn_method = _check_method(fn_method)
    if isinstance(fn_method, MonteCarloFn):
        s = _cached_sub_aggregate(model, w, fn_method.count, fn_method.seed)
        vals = s.values[s.values <= upper]
        g = (1.0 - vals / x) ** -alpha - 1.0
        return float(g.sum() / s.sample_count)
    if w.n != 2:
        raise UnsupportedError("exact v_alpha requires n = 2 or Monte Carlo")

    def fbar_n(u):
        return float(model.survival(u / w.c2))

    boundary = (1.0 - (1.0 - ct) ** -alpha) * fbar_n(upper)
    lo = 0.0
    kink = w.c2 * model.support_min
    total = 0.0

    def grand(u):
        return fbar_n(u) * (1.0 - u / x) ** -(alpha + 1.0)

    if 0.0 < kink < upper:
        total += integrate(grand, lo, kink, spec)
        lo = kink
    total += integrate(grand, lo, upper, spec)
    return alpha / x * total + boundary


# ---------------------------------------------------------------------------
# exact two-risk oracle

def exact_tail_n2(model: TailModel, w: WeightScheme, x: float,
                  spec: QuadratureSpec = DEFAULT_QUAD) -> float:
    """P(c1*max + c2*min > x) for two iid risks, by convolution quadrature.

    Conditioning on the smaller risk U gives
    P = Fbar(u*)^2 + 2 * int_0^{F(u*)} Fbar(x' - c2' q(p)) dp with
    x' = x/c1 and the kink u* = x'/(1 + c2'), where the upper piece has the
    closed form Fbar(u*)^2.
    """
    if w.n != 2:
        raise UnsupportedError("exact_tail_n2 requires n = 2")
    xp = x / w.c1
    c2 = w.c2
    ustar = xp / (1.0 + c2)
    sbar = float(model.survival(ustar))
    if sbar >= 1.0:
        return 1.0
    p_hi = 1.0 - sbar
    scale = sbar  # integrand maximum, reached at p_hi

    def grand(p):
        return float(model.survival(xp - c2 * float(model.quantile(p)))) / scale

    integral = scale * integrate(grand, 0.0, p_hi, spec)
    return min(1.0, sbar * sbar + 2.0 * integral)


def pareto_exact_eps(alpha: float, c2: float, x: float,
                     spec: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Exact second-order factor for the two-risk standard Pareto aggregate.

    Returns eps*(x) with P(max + c2*min > x) = 2 x**-alpha (1 + eps*(x)),
    for unit-scale Pareto risks with survival x**-alpha on x >= 1 and a
    normalized weight pair (1, c2).  Requires x > 1 + c2 so every bracket
    term is defined.
    """
    if alpha <= 0.0 or c2 <= 0.0:
        raise ValueError("pareto_exact_eps requires alpha, c2 > 0")
    if not x > 1.0 + c2:
        raise ValueError(f"pareto_exact_eps requires x > 1 + c2 = {1.0 + c2}")
    ct = c2 / (1.0 + c2)

    def fbar2(y):
        return min(1.0, (y / c2) ** -alpha)

    term1 = ((1.0 + c2) ** alpha / 2.0 - 1.0) * fbar2(ct * x)
    term2 = (1.0 - c2 / x) ** -alpha - 1.0
    lo, hi = c2 / x, ct
    # log substitution keeps the steeply decaying u**-alpha integrand tame
    integral = integrate(
        lambda t: math.exp((1.0 - alpha) * t) * (1.0 - math.exp(t)) ** -(alpha + 1.0),
        math.log(lo), math.log(hi), spec)
    term3 = (ct ** -alpha * (1.0 - (1.0 - ct) ** -alpha) + alpha * integral) * fbar2(x)
    return term1 + term2 + term3
