"""Special functions, series summation and adaptive quadrature.

Everything here is a pure function of its inputs and safe to call from any
number of threads.  Gamma/beta evaluation is delegated to the platform's
lgamma (a fixed-coefficient rational approximation accurate to ~1e-15 on the
ranges used here); the regularized incomplete beta and its inverse come from
scipy's Cephes bindings.  The adaptive quadrature wraps QUADPACK behind an
endpoint-singularity substitution so that integrands like u**-a near 0 are
tamed before refinement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate as _sint
from scipy import special as _sp


class ConvergenceError(RuntimeError):
    """Iteration failed to reach tolerance; carries the best estimate."""

    def __init__(self, message: str, estimate: float, error_bound: float):
        super().__init__(f"{message} (estimate={estimate:.12g}, "
                         f"error_bound={error_bound:.3g})")
        self.estimate = estimate
        self.error_bound = error_bound


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances and subdivision budget for adaptive quadrature."""

    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    max_depth: int = 60

    def __post_init__(self):
        if not (self.abs_tol > 0.0):
            raise ValueError("abs_tol must be positive")
        if not (self.rel_tol > 0.0):
            raise ValueError("rel_tol must be positive")
        if self.max_depth < 1:
            raise ValueError("max_depth must be at least 1")


DEFAULT_QUAD = QuadratureSpec()

# Integer detection for tail indices: the series constant has a pole at each
# integer, and the integer branch is the correct limit object.
INTEGER_TOL = 1e-9


def is_integer_alpha(alpha: float) -> bool:
    return abs(alpha - round(alpha)) <= INTEGER_TOL and alpha > 0


def ln_gamma(z: float) -> float:
    """Natural log of the Gamma function for z > 0."""
    if not z > 0.0:
        raise ValueError(f"ln_gamma requires z > 0, got {z}")
    return math.lgamma(z)


def beta_fn(a: float, b: float) -> float:
    """Euler beta function B(a, b) for a, b > 0."""
    if not (a > 0.0 and b > 0.0):
        raise ValueError(f"beta_fn requires positive arguments, got ({a}, {b})")
    return math.exp(ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b))


def reg_inc_beta(x: float, a: float, b: float) -> float:
    """Regularized incomplete beta I_x(a, b), nondecreasing in x on [0, 1]."""
    if not (a > 0.0 and b > 0.0):
        raise ValueError(f"reg_inc_beta requires positive shape parameters")
    if not (0.0 <= x <= 1.0):
        raise ValueError(f"reg_inc_beta requires x in [0, 1], got {x}")
    return float(_sp.betainc(a, b, x))


def normal_quantile(p):
    """Inverse standard normal cdf; accepts scalars or arrays in (0, 1)."""
    arr = np.asarray(p, dtype=float)
    if np.any(arr <= 0.0) or np.any(arr >= 1.0):
        raise ValueError("normal_quantile requires p in (0, 1)")
    out = _sp.ndtri(arr)
    return float(out) if np.isscalar(p) or arr.ndim == 0 else out


def t_quantile(p, v: float):
    """Inverse cdf of the Student t with v > 0 degrees of freedom.

    Inverts the incomplete-beta representation of the two-sided tail:
    for t >= 0, 2*(1 - T_v(t)) = I_w(v/2, 1/2) with w = v/(v + t^2).
    Accepts scalars or arrays.
    """
    if not v > 0.0:
        raise ValueError(f"t_quantile requires v > 0, got {v}")
    arr = np.asarray(p, dtype=float)
    if np.any(arr <= 0.0) or np.any(arr >= 1.0):
        raise ValueError("t_quantile requires p in (0, 1)")
    ph = np.maximum(arr, 1.0 - arr)           # work on the upper half
    w = _sp.betaincinv(v / 2.0, 0.5, 2.0 * (1.0 - ph))
    w = np.clip(w, np.finfo(float).tiny, 1.0)
    t = np.sqrt(v * (1.0 - w) / w)
    out = np.where(arr >= 0.5, t, -t)
    out = np.where(arr == 0.5, 0.0, out)
    return float(out) if np.isscalar(p) or arr.ndim == 0 else out


def _substitution_exponent(order: float) -> int:
    # Integrand ~ d**-order near the endpoint; u = a + t**k makes the
    # transformed integrand bounded once k*(1 - order) >= 1.
    if order >= 1.0:
        raise ValueError(f"endpoint singularity of order {order} is not integrable")
    if order <= 0.0:
        return 1
    return max(1, math.ceil(1.0 / (1.0 - order)))


def _quad(f, lo, hi, spec: QuadratureSpec) -> float:
    out = _sint.quad(f, lo, hi, epsabs=spec.abs_tol, epsrel=spec.rel_tol,
                     limit=spec.max_depth, full_output=1)
    y, abserr = out[0], out[1]
    if len(out) > 3 and abserr > max(spec.abs_tol, spec.rel_tol * abs(y)):
        raise ConvergenceError("quadrature did not converge", y, abserr)
    return y


def integrate(f: Callable[[float], float], a: float, b: float,
              spec: QuadratureSpec = DEFAULT_QUAD,
              left_order: Optional[float] = None,
              right_order: Optional[float] = None) -> float:
    """Adaptive integral of f over (a, b) with optional endpoint singularities.

    ``left_order``/``right_order`` declare the order s of an integrable
    singularity at the corresponding endpoint (integrand ~ distance**-s,
    0 <= s < 1); the endpoint is then regularized by the substitution
    u = endpoint +/- t**k with k = ceil(1/(1-s)) before adaptive refinement.
    """
    if not b > a:
        raise ValueError(f"integrate requires b > a, got ({a}, {b})")
    if left_order is not None and right_order is not None:
        mid = 0.5 * (a + b)
        return (integrate(f, a, mid, spec, left_order=left_order)
                + integrate(f, mid, b, spec, right_order=right_order))
    if left_order is not None:
        k = _substitution_exponent(left_order)
        if k == 1:
            return _quad(f, a, b, spec)
        top = (b - a) ** (1.0 / k)
        return _quad(lambda t: f(a + t ** k) * k * t ** (k - 1), 0.0, top, spec)
    if right_order is not None:
        k = _substitution_exponent(right_order)
        if k == 1:
            return _quad(f, a, b, spec)
        top = (b - a) ** (1.0 / k)
        return _quad(lambda t: f(b - t ** k) * k * t ** (k - 1), 0.0, top, spec)
    return _quad(f, a, b, spec)


def integral_I(alpha: float, upper: float,
               spec: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Integral of u**-alpha * (1-u)**-(alpha+1) over (0, upper).

    Requires 0 < alpha < 1 (the integral diverges at 0 otherwise) and
    0 < upper < 1.
    """
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"integral_I requires 0 < alpha < 1, got {alpha}")
    if not (0.0 < upper < 1.0):
        raise ValueError(f"integral_I requires upper in (0, 1), got {upper}")
    expo = -(alpha + 1.0)
    return integrate(lambda u: u ** (-alpha) * (1.0 - u) ** expo,
                     0.0, upper, spec, left_order=alpha)


def kappa_series(alpha: float, c_tilde: float, tol: float = 1e-12) -> float:
    """Sum over j >= 0 of Gamma(a+j)/(Gamma(a) j!) * a * c^j / (j - a).

    The tail-constant series for a non-integer index ``alpha`` and weight
    ratio ``c_tilde`` in (0, 1).  Terms follow the recurrence
    term[j+1] = term[j] * ((a+j)/(j+1)) * c * ((j-a)/(j+1-a)) and decay
    geometrically since c_tilde < 1; summation stops after three consecutive
    terms below tol relative to the running sum (the j - alpha factor changes
    sign once, so a single small term is not trusted).
    """
    if not alpha > 0.0:
        raise ValueError(f"kappa_series requires alpha > 0, got {alpha}")
    if is_integer_alpha(alpha):
        raise ValueError(f"kappa_series is undefined for integer alpha ({alpha})")
    if not (0.0 < c_tilde < 1.0):
        raise ValueError(f"kappa_series requires c_tilde in (0, 1), got {c_tilde}")
    if not tol > 0.0:
        raise ValueError("tol must be positive")
    term = -1.0                      # j = 0: alpha / (0 - alpha)
    total = term
    consecutive_small = 0
    for j in range(1, 1_000_000):
        term *= ((alpha + j - 1.0) / j) * c_tilde * ((j - 1.0 - alpha) / (j - alpha))
        total += term
        if abs(term) < tol * max(1.0, abs(total)):
            consecutive_small += 1
            if consecutive_small >= 3:
                return total
        else:
            consecutive_small = 0
    raise ConvergenceError("kappa_series did not converge", total, abs(term))
