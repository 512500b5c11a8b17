"""Tail expansion engine for weighted order-statistic sums.

Approximates P(S > x) for S = c1*X(n) + ... + cn*X(1) with iid heavy-tailed
risks, at three levels:

    first   n * Fbar(x')                           (largest claim dominates)
    second  n * Fbar(x') * (1 + E(x'))             (joint-tail correction)
    higher  n * Fbar(x') * (d(x') + (n-1)/2 * kappa * R(x'))

where x' = x/c1 and all internal quantities live in normalized weights
(general c1 is handled once, at entry, by substituting x/c1 and c_k/c1).

The correction constant ``kappa`` has two regimes: a convergent series for a
non-integer tail index, and a Gamma-ratio closed form in the integer case
(which is the limit object as the index approaches an integer; indices within
1e-9 of an integer are treated as integers).  The remainder scale R switches
accordingly between the plain survival function and a truncated fractional
moment of the sub-aggregate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .aggregate import (FnMethod, MonteCarloFn, WeightScheme,
                        _cached_sub_aggregate, moment_s_prev, mu_f,
                        survival_fn)
from .distributions import TailModel
from .errors import UnsupportedError
from .numerics import (DEFAULT_QUAD, QuadratureSpec, integral_I, integrate,
                       is_integer_alpha, kappa_series, ln_gamma)


@dataclass(frozen=True)
class ExpansionContext:
    """Model, weights and cached expansion constants (normalized weights)."""

    model: TailModel
    w: WeightScheme
    fn_method: FnMethod
    quad_spec: QuadratureSpec
    l: int                      # ceil(alpha) - 1
    integer_case: bool
    kappa: float
    kappa_tilde: float
    h_alpha: float
    phi_alpha: Optional[float]  # defined only for alpha < 1
    rho_star: float
    moments: tuple              # E[sub-aggregate**j], j = 0..l (None if unavailable)
    degenerate: bool            # kappa == 0: the correction term vanishes

    @property
    def n(self) -> int:
        return self.w.n

    @property
    def alpha(self) -> float:
        return self.model.alpha


def _kappa_constant(alpha: float, c2: float, c_tilde: float, n: int,
                    integer_case: bool) -> float:
    if integer_case:
        if n == 1:
            return 0.0
        return (2.0 / (n - 1)) * math.exp(ln_gamma(2.0 * alpha)
                                          - ln_gamma(alpha)
                                          - ln_gamma(alpha + 1.0))
    base = (1.0 + c2) ** alpha
    return base * (base + 2.0 * kappa_series(alpha, c_tilde))


def h_alpha_constant(model_alpha: float, c_tilde: float,
                     spec: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Limit of the sub-aggregate correction ratio (alpha for alpha >= 1)."""
    if model_alpha >= 1.0:
        return model_alpha
    ct = c_tilde
    return (ct ** -model_alpha * (1.0 - (1.0 - ct) ** -model_alpha)
            + model_alpha * integral_I(model_alpha, ct, spec))


def phi_alpha_constant(alpha: float, c2: float, c_tilde: float,
                       spec: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Second-order coefficient for alpha < 1 (its integral diverges otherwise)."""
    if alpha >= 1.0:
        raise UnsupportedError("phi_alpha is defined only for alpha < 1")
    return (2.0 * alpha * c2 ** alpha * integral_I(alpha, c_tilde, spec)
            - (1.0 + c2) ** (2.0 * alpha))


def make_context(model: TailModel, w: WeightScheme,
                 fn_method: FnMethod = None,
                 spec: QuadratureSpec = DEFAULT_QUAD) -> ExpansionContext:
    """Assemble the expansion context; constants are computed eagerly.

    The sub-aggregate moment table is filled where a backend exists (closed
    form for n <= 2, Monte Carlo when ``fn_method`` provides one); otherwise
    entries are left unset and operations needing them raise.
    """
    if fn_method is None:
        fn_method = "exact_n2" if w.n == 2 else "asymptotic"
    alpha = model.alpha
    l = math.ceil(alpha) - 1 if not is_integer_alpha(alpha) else round(alpha) - 1
    integer_case = is_integer_alpha(alpha)
    kappa = _kappa_constant(alpha, w.c2, w.c_tilde, w.n, integer_case)
    kappa_tilde = kappa + (0.0 if integer_case else 1.0)
    h_alpha = h_alpha_constant(alpha, w.c_tilde, spec) if w.n >= 2 else alpha
    phi = None
    if alpha < 1.0 and w.n >= 2:
        phi = phi_alpha_constant(alpha, w.c2, w.c_tilde, spec)
    rho_star = max(-1.0, -alpha, model.rho)
    moments = []
    for j in range(l + 1):
        try:
            moments.append(moment_s_prev(model, w, j, fn_method))
        except UnsupportedError:
            moments.append(None)
    return ExpansionContext(
        model=model, w=w, fn_method=fn_method, quad_spec=spec, l=l,
        integer_case=integer_case, kappa=kappa, kappa_tilde=kappa_tilde,
        h_alpha=h_alpha, phi_alpha=phi, rho_star=rho_star,
        moments=tuple(moments), degenerate=abs(kappa) < 1e-12)


# ---------------------------------------------------------------------------
# correction functions (normalized coordinates: x here means x / c1)

def d_coeff(ctx: ExpansionContext, x: float) -> float:
    """Taylor coefficient sum of the dominant-claim decomposition at x."""
    model = ctx.model
    if ctx.l > model.m:
        raise UnsupportedError(
            f"{model.describe()} lacks derivatives of order {ctx.l}")
    fbar = float(model.survival(x))
    total = 0.0
    fact = 1.0
    for j in range(ctx.l + 1):
        if j > 0:
            fact *= j
        mom = ctx.moments[j]
        if mom is None:
            raise UnsupportedError(
                "sub-aggregate moments unavailable; use a Monte Carlo F_n method")
        total += (-1.0) ** j * model.survival_deriv(j, x) / fact * mom / fbar
    return total


def remainder_scale(ctx: ExpansionContext, x: float) -> float:
    """Scale of the joint-tail remainder at x (normalized coordinates)."""
    if not x > 0.0:
        raise ValueError("remainder_scale requires x > 0")
    model, w = ctx.model, ctx.w
    if not ctx.integer_case:
        return float(model.survival(x))
    alpha = ctx.alpha
    upper = w.c_tilde * x
    if isinstance(ctx.fn_method, MonteCarloFn):
        s = _cached_sub_aggregate(model, w, ctx.fn_method.count,
                                  ctx.fn_method.seed)
        vals = s.values[s.values <= upper]
        return float((vals ** alpha).sum() / s.sample_count) / x ** alpha
    if w.n != 2:
        raise UnsupportedError(
            "integer-index remainder needs exact n=2 or a Monte Carlo method")
    # n = 2: the sub-aggregate is c2*X, so the truncated fractional moment is
    # c2^alpha * int t^alpha dF(t) over (0, upper/c2], via quantile quadrature.
    y = upper / w.c2
    p_lo = 1.0 - float(model.survival(model.support_min))
    p_hi = 1.0 - float(model.survival(y))
    if p_hi <= p_lo:
        return 0.0
    val = integrate(lambda p: float(model.quantile(p)) ** alpha,
                    p_lo, p_hi, ctx.quad_spec)
    return w.c2 ** alpha * val / x ** alpha


def eps_x(ctx: ExpansionContext, x: float) -> float:
    """Second-order correction E(x) of the tail approximation (normalized x)."""
    w = ctx.w
    coeff = (1.0 + w.c2) ** ctx.alpha / 2.0 - 1.0
    fn_tail = survival_fn(ctx.model, w, w.c_tilde * x, ctx.fn_method)
    mode = "asymptotic" if ctx.fn_method == "asymptotic" else "definition"
    mu = mu_f(ctx.model, w, x, mode=mode, fn_method=ctx.fn_method,
              spec=ctx.quad_spec)
    return coeff * fn_tail + ctx.h_alpha * mu


ORDERS = ("first", "second", "higher")


def tail_approx(ctx: ExpansionContext, x: float, order: str = "second") -> float:
    """Approximate P(S > x) at the requested order.

    Values are returned raw and may exceed 1 outside the tail; callers that
    need probabilities should flag values above 1 rather than clamp them.
    """
    if order not in ORDERS:
        raise UnsupportedError(f"unknown approximation order {order!r}")
    xp = x / ctx.w.c1
    n = ctx.n
    fbar = float(ctx.model.survival(xp))
    if order == "first":
        return n * fbar
    if order == "second":
        return n * fbar * (1.0 + eps_x(ctx, xp))
    return n * fbar * (d_coeff(ctx, xp)
                       + 0.5 * (n - 1) * ctx.kappa * remainder_scale(ctx, xp))


def delta_max(ctx: ExpansionContext, x: float) -> float:
    """Approximate P(S > x) - P(c1*max > x), the excess over the largest claim."""
    xp = x / ctx.w.c1
    n = ctx.n
    fbar = float(ctx.model.survival(xp))
    return n * fbar * (d_coeff(ctx, xp) - 1.0
                       + 0.5 * (n - 1) * ctx.kappa_tilde * remainder_scale(ctx, xp))


def tail_with_proxy(ctx: ExpansionContext, proxy: TailModel, x: float) -> float:
    """Higher-order tail approximation driven by a smooth proxy survival.

    The proxy must share the tail index; its derivatives replace the model's
    in the Taylor sum while the moment table and remainder stay with the
    model.  Useful when the model itself lacks smooth derivatives but a
    tail-equivalent df has them.
    """
    if abs(proxy.alpha - ctx.alpha) > 1e-12:
        raise ValueError(
            f"proxy tail index {proxy.alpha:g} != model index {ctx.alpha:g}")
    if ctx.l > proxy.m:
        raise UnsupportedError(
            f"proxy {proxy.describe()} lacks derivatives of order {ctx.l}")
    xp = x / ctx.w.c1
    n = ctx.n
    fbar = float(ctx.model.survival(xp))
    hbar = float(proxy.survival(xp))
    total = 0.0
    fact = 1.0
    for j in range(ctx.l + 1):
        if j > 0:
            fact *= j
        mom = ctx.moments[j]
        if mom is None:
            raise UnsupportedError("sub-aggregate moments unavailable")
        total += (-1.0) ** j * proxy.survival_deriv(j, xp) / fact * mom / hbar
    return n * fbar + n * hbar * (total - 1.0
                                  + 0.5 * (n - 1) * ctx.kappa
                                  * remainder_scale(ctx, xp))


def aux_A_star(ctx: ExpansionContext, x: float, mode: str = "exact_form") -> float:
    """Auxiliary function of the aggregate's second-order expansion at x.

    ``exact_form`` evaluates the defining combination through the context's
    F_n backend; ``asymptotic`` uses the three-branch leading form.  Models
    without a second-order term contribute A = 0.
    """
    model, w = ctx.model, ctx.w
    alpha = ctx.alpha
    alpha_star = min(1.0, alpha)
    a_val = model.aux_A(x) if model.has_second_order else 0.0
    if mode == "exact_form":
        fn_tail = survival_fn(model, w, w.c_tilde * x, ctx.fn_method)
        mu_mode = "asymptotic" if ctx.fn_method == "asymptotic" else "definition"
        mu = mu_f(model, w, x, mode=mu_mode, fn_method=ctx.fn_method,
                  spec=ctx.quad_spec)
        return (a_val + alpha * (1.0 - (1.0 + w.c2) ** alpha / 2.0) * fn_tail
                - alpha_star * ctx.h_alpha * mu)
    if mode != "asymptotic":
        raise UnsupportedError(f"unknown aux_A_star mode {mode!r}")
    rho = ctx.model.rho
    if rho > -alpha_star:
        return a_val
    if alpha < 1.0:
        lead = -0.5 * (ctx.n - 1) * alpha * ctx.phi_alpha * float(model.survival(x))
        return lead + (a_val if abs(rho + alpha) <= 1e-12 else 0.0)
    mu = mu_f(model, w, x, mode="asymptotic", fn_method=ctx.fn_method,
              spec=ctx.quad_spec)
    return -alpha * mu + (a_val if abs(rho + 1.0) <= 1e-12 else 0.0)
