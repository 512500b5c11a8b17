"""Heavy-tailed distribution zoo and the generic one-dimensional risk contract.

Each model exposes the survival function, quantile, smooth survival
derivatives, raw moments, and second-order tail metadata: the tail index
``alpha`` (the survival function is regularly varying with index -alpha), the
second-order parameter ``rho`` <= 0 controlling the rate of that convergence,
and, for Hall-class families, the constants (k1, k2) of the representation
survival(x) = k1 * x**-alpha * (1 + k2 * x**rho * (1 + o(1))).

Families and parameters:

    std_pareto(alpha)        survival x**-alpha on x >= 1; no second-order
                             term (rho is the -inf sentinel)
    pareto(alpha, theta)     survival (theta/(x+theta))**alpha on x >= 0
    burr(a, b)               survival (1+x**b)**-a; alpha = a*b, rho = -b
    frechet(alpha)           survival 1 - exp(-x**-alpha); rho = -alpha
    hall_weiss(alpha, rho)   survival x**-alpha * (1+x**rho)/2 on x >= 1
    abs_student_t(v)         |T| for a standard Student t; alpha = v, rho = -2
    g_and_h(g, h)            (exp(g Z)-1)/g * exp(h Z^2/2) for Z ~ N(0,1),
                             g, h > 0; alpha = 1/h, rho = 0; only the
                             positive-value branch is modelled (m = 0)

Models are immutable after construction and all operations are pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Union

import numpy as np
from scipy import special as _sp

from .errors import InfiniteMomentError, NoSecondOrderError, UnsupportedError
from .numerics import (DEFAULT_QUAD, QuadratureSpec, integrate, ln_gamma,
                       normal_quantile, t_quantile)

FAMILIES = ("std_pareto", "pareto", "burr", "frechet", "hall_weiss",
            "abs_student_t", "g_and_h")

ArrayLike = Union[float, np.ndarray]


def _vector_op(x, fn):
    arr = np.asarray(x, dtype=float)
    out = fn(arr)
    if np.isscalar(x) or arr.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class TailModel:
    """Immutable one-dimensional heavy-tailed risk model."""

    family: str
    params: tuple  # family-specific, in the order documented above
    alpha: float
    rho: float     # -inf means "no second-order term"
    m: int         # highest available survival derivative order
    support_min: float
    k1: Optional[float] = None
    k2: Optional[float] = None

    # -- metadata ---------------------------------------------------------

    @property
    def hall(self) -> Optional[tuple]:
        if self.k1 is None:
            return None
        return (self.k1, self.k2)

    @property
    def has_second_order(self) -> bool:
        return math.isfinite(self.rho)

    @property
    def mean(self) -> float:
        if self.alpha <= 1.0:
            return math.inf
        return raw_moment(self, 1)

    def describe(self) -> str:
        pieces = ",".join(f"{v:g}" for v in self.params)
        return f"{self.family}({pieces})"

    # -- core operations ----------------------------------------------------

    def survival(self, x: ArrayLike) -> ArrayLike:
        """P(X > x); clamped to 1 below the support."""
        return _vector_op(x, lambda a: _survival(self, a))

    def quantile(self, p: ArrayLike) -> ArrayLike:
        """Generalized inverse of the cdf at p in (0, 1)."""
        return _vector_op(p, lambda a: _quantile(self, a))

    def survival_deriv(self, j: int, x: float) -> float:
        """j-th derivative of the survival function at x inside the support."""
        return survival_deriv(self, j, x)

    def aux_A(self, x: float) -> float:
        """Second-order auxiliary function at x."""
        return aux_A(self, x)

    def raw_moment(self, j: int) -> float:
        return raw_moment(self, j)

    def truncated_first_moment(self, x: float) -> float:
        return truncated_first_moment(self, x)

    def cte(self, p: float, spec: QuadratureSpec = DEFAULT_QUAD) -> float:
        """Conditional tail expectation E[X | X > quantile(p)]."""
        return cte(self, p, spec)


# ---------------------------------------------------------------------------
# construction

def make_model(family: str, **params) -> TailModel:
    """Build a TailModel from a family name and its parameters."""
    fam = family.strip().lower()
    if fam not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")

    def need(*names):
        missing = [k for k in names if k not in params]
        extra = [k for k in params if k not in names]
        if missing or extra:
            raise ValueError(f"{fam} takes parameters {names}, got {sorted(params)}")
        vals = tuple(float(params[k]) for k in names)
        return vals

    if fam == "std_pareto":
        (alpha,) = need("alpha")
        if alpha <= 0:
            raise ValueError("std_pareto requires alpha > 0")
        return TailModel(fam, (alpha,), alpha, -math.inf,
                         math.ceil(alpha), 1.0)
    if fam == "pareto":
        alpha, theta = need("alpha", "theta")
        if alpha <= 0 or theta <= 0:
            raise ValueError("pareto requires alpha, theta > 0")
        return TailModel(fam, (alpha, theta), alpha, -1.0, math.ceil(alpha),
                         0.0, k1=theta ** alpha, k2=-alpha * theta)
    if fam == "burr":
        a, b = need("a", "b")
        if a <= 0 or b <= 0:
            raise ValueError("burr requires a, b > 0")
        alpha = a * b
        return TailModel(fam, (a, b), alpha, -b, math.ceil(alpha),
                         0.0, k1=1.0, k2=-a)
    if fam == "frechet":
        (alpha,) = need("alpha")
        if alpha <= 0:
            raise ValueError("frechet requires alpha > 0")
        return TailModel(fam, (alpha,), alpha, -alpha, math.ceil(alpha),
                         0.0, k1=1.0, k2=-0.5)
    if fam == "hall_weiss":
        alpha, rho = need("alpha", "rho")
        if alpha <= 0 or rho >= 0:
            raise ValueError("hall_weiss requires alpha > 0 and rho < 0")
        return TailModel(fam, (alpha, rho), alpha, rho, math.ceil(alpha),
                         1.0, k1=0.5, k2=1.0)
    if fam == "abs_student_t":
        (v,) = need("v")
        if v <= 0:
            raise ValueError("abs_student_t requires v > 0")
        k1 = (2.0 * math.exp(ln_gamma((v + 1.0) / 2.0) - ln_gamma(v / 2.0))
              / math.sqrt(v * math.pi) * v ** ((v - 1.0) / 2.0))
        k2 = -v * v * (v + 1.0) / (2.0 * (v + 2.0))
        return TailModel(fam, (v,), v, -2.0, math.ceil(v), 0.0, k1=k1, k2=k2)
    if fam == "g_and_h":
        g, h = need("g", "h")
        if g <= 0 or h <= 0:
            raise ValueError("g_and_h requires g, h > 0")
        return TailModel(fam, (g, h), 1.0 / h, 0.0, 0, 0.0)
    raise AssertionError(fam)


def parse_model_spec(spec: str) -> TailModel:
    """Parse a model spec string like ``burr:a=0.8,b=2.5`` (case-insensitive)."""
    text = spec.strip()
    if ":" not in text:
        raise ValueError(f"model spec {spec!r} must look like family:key=value,...")
    fam, _, rest = text.partition(":")
    params = {}
    for piece in rest.split(","):
        piece = piece.strip()
        if not piece:
            continue
        if "=" not in piece:
            raise ValueError(f"bad parameter {piece!r} in model spec {spec!r}")
        key, _, val = piece.partition("=")
        try:
            params[key.strip().lower()] = float(val)
        except ValueError as exc:
            raise ValueError(f"bad value {val!r} in model spec {spec!r}") from exc
    return make_model(fam, **params)


# ---------------------------------------------------------------------------
# survival / quantile

def _gh_transform(g: float, h: float, z):
    z = np.asarray(z, dtype=float)
    return np.expm1(g * z) / g * np.exp(h * z * z / 2.0)


def _gh_log_transform(g: float, h: float, z: float) -> float:
    # log of the transform, valid for z > 0
    return math.log(math.expm1(g * z) / g) + h * z * z / 2.0


def _gh_inverse(g: float, h: float, x: float) -> float:
    """Unique z >= 0 with (exp(g z)-1)/g * exp(h z^2/2) = x, for x >= 0."""
    if x == 0.0:
        return 0.0
    target = math.log(x)
    lo, hi = 0.0, 1.0
    while _gh_log_transform(g, h, hi) < target:
        lo = hi
        hi *= 2.0
        if hi > 1e6:
            raise ValueError(f"g_and_h inversion bracket failed at x={x}")
    z = 0.5 * (lo + hi)
    for _ in range(200):
        val = _gh_log_transform(g, h, z) - target
        if val > 0.0:
            hi = z
        else:
            lo = z
        e = math.expm1(g * z)
        slope = g * (e + 1.0) / e + h * z if e > 0.0 else 1.0 / z + h * z
        step = val / slope
        z_new = z - step
        if not (lo < z_new < hi):
            z_new = 0.5 * (lo + hi)
        if abs(z_new - z) <= 1e-12 * max(1.0, abs(z)):
            return z_new
        z = z_new
    return z


def _survival(model: TailModel, x: np.ndarray) -> np.ndarray:
    fam, p = model.family, model.params
    below = x < model.support_min
    xs = np.where(below, model.support_min + 1.0, x)  # dummy to avoid warnings
    if fam == "std_pareto":
        out = xs ** -p[0]
    elif fam == "pareto":
        out = (p[1] / (xs + p[1])) ** p[0]
    elif fam == "burr":
        out = (1.0 + xs ** p[1]) ** -p[0]
    elif fam == "frechet":
        xs = np.where(xs <= 0.0, 1.0, xs)
        out = -np.expm1(-(xs ** -p[0]))
    elif fam == "hall_weiss":
        out = xs ** -p[0] * (1.0 + xs ** p[1]) / 2.0
    elif fam == "abs_student_t":
        v = p[0]
        out = _sp.betainc(v / 2.0, 0.5, v / (v + xs * xs))
    elif fam == "g_and_h":
        g, h = p
        z = np.vectorize(lambda t: _gh_inverse(g, h, t))(xs)
        out = _sp.ndtr(-z)
    else:
        raise AssertionError(fam)
    return np.where(below, 1.0, np.clip(out, 0.0, 1.0))


def _quantile(model: TailModel, p: np.ndarray) -> np.ndarray:
    if np.any(p <= 0.0) or np.any(p >= 1.0):
        raise ValueError("quantile requires p in (0, 1)")
    fam, par = model.family, model.params
    if fam == "std_pareto":
        return (1.0 - p) ** (-1.0 / par[0])
    if fam == "pareto":
        return par[1] * ((1.0 - p) ** (-1.0 / par[0]) - 1.0)
    if fam == "burr":
        return ((1.0 - p) ** (-1.0 / par[0]) - 1.0) ** (1.0 / par[1])
    if fam == "frechet":
        return (-np.log(p)) ** (-1.0 / par[0])
    if fam == "hall_weiss":
        return _bisect_quantile(model, p)
    if fam == "abs_student_t":
        return t_quantile((p + 1.0) / 2.0, par[0])
    if fam == "g_and_h":
        # Full-range quantile: negative below the median.  The model's tail
        # metadata describes the positive branch, but sampling the aggregate
        # needs the whole distribution.
        return _gh_transform(par[0], par[1], normal_quantile(p))
    raise AssertionError(fam)


def _bisect_quantile(model: TailModel, p: np.ndarray) -> np.ndarray:
    target = 1.0 - p
    lo = np.full_like(target, model.support_min)
    hi = np.full_like(target, max(2.0, 2.0 * model.support_min))
    for _ in range(200):
        todo = _survival(model, hi) > target
        if not np.any(todo):
            break
        hi = np.where(todo, hi * 2.0, hi)
    for _ in range(90):
        mid = 0.5 * (lo + hi)
        high_side = _survival(model, mid) > target
        lo = np.where(high_side, mid, lo)
        hi = np.where(high_side, hi, mid)
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# survival derivatives (term-list representations, exact to all needed orders)

def _pochhammer(a: float, j: int) -> float:
    out = 1.0
    for i in range(j):
        out *= a + i
    return out


@lru_cache(maxsize=512)
def _deriv_terms(model: TailModel, j: int) -> tuple:
    """Term list for the j-th survival derivative, j >= 1, family-specific."""
    fam = model.family
    if j == 1:
        p = model.params
        if fam == "burr":
            a, b = p
            return ((-a * b, b - 1.0, -a - 1.0),)          # c * x^p * (1+x^b)^q
        if fam == "frechet":
            alpha = p[0]
            return ((-alpha, -alpha - 1.0),)               # c * x^p * exp(-x^-alpha)
        if fam == "abs_student_t":
            v = p[0]
            k0 = (math.exp(ln_gamma((v + 1.0) / 2.0) - ln_gamma(v / 2.0))
                  / math.sqrt(v * math.pi))
            return ((-2.0 * k0, 0.0, -(v + 1.0) / 2.0),)   # c * x^p * (1+x^2/v)^q
        raise AssertionError(fam)
    prev = _deriv_terms(model, j - 1)
    out = []
    if fam == "burr":
        b = model.params[1]
        for c, pw, q in prev:
            if pw != 0.0:
                out.append((c * pw, pw - 1.0, q))
            out.append((c * q * b, pw + b - 1.0, q - 1.0))
    elif fam == "frechet":
        alpha = model.params[0]
        for c, pw in prev:
            if pw != 0.0:
                out.append((c * pw, pw - 1.0))
            out.append((c * alpha, pw - alpha - 1.0))
    elif fam == "abs_student_t":
        v = model.params[0]
        for c, pw, q in prev:
            if pw != 0.0:
                out.append((c * pw, pw - 1.0, q))
            out.append((c * q * 2.0 / v, pw + 1.0, q - 1.0))
    else:
        raise AssertionError(fam)
    return tuple(out)


def survival_deriv(model: TailModel, j: int, x: float) -> float:
    """j-th derivative of the survival function, 0 <= j <= model.m."""
    if j < 0:
        raise ValueError("derivative order must be nonnegative")
    if j > model.m:
        raise UnsupportedError(
            f"{model.describe()} supports survival derivatives up to order "
            f"{model.m}, requested {j}")
    if j == 0:
        return float(model.survival(x))
    if not x > model.support_min:
        raise ValueError(f"derivatives need x strictly inside the support")
    fam, p = model.family, model.params
    sign = -1.0 if j % 2 else 1.0
    if fam == "std_pareto":
        alpha = p[0]
        return sign * _pochhammer(alpha, j) * x ** (-alpha - j)
    if fam == "pareto":
        alpha, theta = p
        return sign * _pochhammer(alpha, j) * theta ** alpha * (x + theta) ** (-alpha - j)
    if fam == "hall_weiss":
        alpha, rho = p
        return sign * 0.5 * (_pochhammer(alpha, j) * x ** (-alpha - j)
                             + _pochhammer(alpha - rho, j) * x ** (rho - alpha - j))
    if fam == "burr":
        b = p[1]
        base = 1.0 + x ** b
        return sum(c * x ** pw * base ** q for c, pw, q in _deriv_terms(model, j))
    if fam == "frechet":
        alpha = p[0]
        e = math.exp(-(x ** -alpha))
        return sum(c * x ** pw * e for c, pw in _deriv_terms(model, j))
    if fam == "abs_student_t":
        v = p[0]
        base = 1.0 + x * x / v
        return sum(c * x ** pw * base ** q for c, pw, q in _deriv_terms(model, j))
    raise UnsupportedError(f"{model.describe()} has no smooth derivatives")


# ---------------------------------------------------------------------------
# second-order machinery

def aux_A(model: TailModel, x: float) -> float:
    """Auxiliary function of the second-order tail expansion at x.

    Hall-class families use the asymptotic form k2 * rho * x**rho as the
    definition; the g-and-h model uses g / (h^2 * z(x)) with z the normal
    score of x.
    """
    if not model.has_second_order:
        raise NoSecondOrderError(
            f"{model.describe()} has no second-order tail term")
    if model.family == "g_and_h":
        g, h = model.params
        if not x > 0.0:
            raise ValueError("g_and_h auxiliary function needs x > 0")
        return g / (h * h * _gh_inverse(g, h, x))
    return model.k2 * model.rho * x ** model.rho


def h_limit(alpha: float, rho: float, x: float) -> float:
    """Limit function of the normalized survival-ratio error.

    Equals x**-alpha * (x**rho - 1)/rho for rho < 0 and x**-alpha * ln(x)
    at rho = 0.
    """
    if not x > 0.0:
        raise ValueError("h_limit requires x > 0")
    if not math.isfinite(rho) or rho > 0.0:
        raise ValueError("h_limit requires finite rho <= 0")
    if rho == 0.0:
        return x ** -alpha * math.log(x)
    return x ** -alpha * (x ** rho - 1.0) / rho


# ---------------------------------------------------------------------------
# moments

def raw_moment(model: TailModel, j: int) -> float:
    """E[X**j] for integer 0 <= j < alpha (closed form where available)."""
    if j < 0:
        raise ValueError("moment order must be nonnegative")
    if j == 0:
        return 1.0
    if j >= model.alpha:
        raise InfiniteMomentError(
            f"moment of order {j} is infinite for {model.describe()} "
            f"(tail index {model.alpha:g})")
    fam, p = model.family, model.params
    if fam == "std_pareto":
        return p[0] / (p[0] - j)
    if fam == "burr":
        a, b = p
        return math.exp(ln_gamma(a - j / b) + ln_gamma(1.0 + j / b) - ln_gamma(a))
    if fam == "pareto":
        alpha, theta = p
        return theta ** j * math.exp(ln_gamma(j + 1.0) + ln_gamma(alpha - j)
                                     - ln_gamma(alpha))
    if fam == "frechet":
        return math.exp(ln_gamma(1.0 - j / p[0]))
    if fam == "hall_weiss":
        alpha, rho = p
        return 1.0 + 0.5 * j * (1.0 / (alpha - j) + 1.0 / (alpha - j - rho))
    if fam == "abs_student_t":
        v = p[0]
        return (v ** (j / 2.0)
                * math.exp(ln_gamma((j + 1.0) / 2.0) + ln_gamma((v - j) / 2.0)
                           - ln_gamma(v / 2.0)) / math.sqrt(math.pi))
    if fam == "g_and_h":
        g, h = p
        scale = 1.0 / math.sqrt(1.0 - j * h)
        total = 0.0
        for k in range(j + 1):
            total += (math.comb(j, k) * (-1.0) ** (j - k)
                      * math.exp(k * k * g * g / (2.0 * (1.0 - j * h))))
        return scale * total / g ** j
    raise AssertionError(fam)


def raw_moment_quadrature(model: TailModel, j: int,
                          spec: QuadratureSpec = DEFAULT_QUAD) -> float:
    """E[X**j] by quantile quadrature; independent cross-check of raw_moment."""
    if j == 0:
        return 1.0
    if j >= model.alpha:
        raise InfiniteMomentError("infinite moment")
    return integrate(lambda u: float(model.quantile(u)) ** j, 0.0, 1.0,
                     spec, right_order=j / model.alpha)


def truncated_first_moment(model: TailModel, x: float,
                           spec: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Integral of u over the distribution restricted to (support_min, x]."""
    p_lo = 1.0 - float(model.survival(model.support_min))
    p_hi = 1.0 - float(model.survival(x))
    if p_hi <= p_lo:
        return 0.0
    return integrate(lambda u: float(model.quantile(u)), p_lo, p_hi, spec)


def cte(model: TailModel, p: float, spec: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Conditional tail expectation E[X | X > quantile(p)] for alpha > 1."""
    if model.alpha <= 1.0:
        raise UnsupportedError(
            f"conditional tail expectation needs tail index > 1, "
            f"{model.describe()} has {model.alpha:g}")
    if not 0.0 < p < 1.0:
        raise ValueError("cte requires p in (0, 1)")
    val = integrate(lambda u: float(model.quantile(u)), p, 1.0, spec,
                    right_order=1.0 / model.alpha)
    return val / (1.0 - p)
