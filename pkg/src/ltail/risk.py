"""Risk measures for the weighted aggregate: concentrations, ratios, premiums.

All quantities are second-order approximations as the probability level p
tends to 1 (or the retention d tends to infinity):

    c_var / c_cte    value-at-risk and conditional-tail-expectation
                     concentration of the aggregate relative to n standalone
                     risks, leading constant c1 * n**(1/alpha - 1)
    r_var / r_cte    integrated-measure-to-measure ratios (tail VaR over VaR
                     and tail CTE over CTE), leading constant alpha/(alpha-1)
    stop_loss        E[max(S - d, 0)] for a retention d
    premium          reinsurance premium backing out a target excess return
                     on capital tau, priced off either measure

Level-p quantities are evaluated at the tail-equivalent quantile: for
Hall-class models the closed asymptotic form ((1-p)/k1)**(-1/alpha) is used,
so the generic branch formulas and the per-family closed forms agree to the
order the expansion controls; other models use the exact quantile.  Models
without a second-order term contribute a zero auxiliary function.
"""

from __future__ import annotations

import math
import warnings

from .aggregate import mu_f
from .distributions import TailModel
from .errors import UnsupportedError
from .expansion import (ExpansionContext, aux_A_star, eps_x,
                        phi_alpha_constant)
from .numerics import integrate

_BOUNDARY_TOL = 1e-12


def _alpha_gt_one(ctx: ExpansionContext, what: str) -> float:
    alpha = ctx.alpha
    if alpha <= 1.0:
        raise UnsupportedError(
            f"{what} requires tail index > 1, {ctx.model.describe()} has {alpha:g}")
    return alpha


def level_quantile(model: TailModel, p: float) -> float:
    """Quantile used for level-p tail quantities (Hall asymptotic if available)."""
    if not 0.0 < p < 1.0:
        raise ValueError("probability level must be in (0, 1)")
    if model.hall is not None:
        k1, _ = model.hall
        return ((1.0 - p) / k1) ** (-1.0 / model.alpha)
    return float(model.quantile(p))


def _aux_at_level(model: TailModel, x: float) -> float:
    return model.aux_A(x) if model.has_second_order else 0.0


def eps_p(ctx: ExpansionContext, p: float) -> float:
    """Second-order correction of the VaR concentration at level p.

    Branches on (alpha, rho); boundary terms at rho == -alpha and rho == -1
    switch on exact equality of the declared model constants.
    """
    model, w = ctx.model, ctx.w
    alpha, rho, n = ctx.alpha, model.rho, ctx.n
    x = level_quantile(model, p)
    a_val = _aux_at_level(model, x)
    if alpha < 1.0 and rho <= -alpha:
        out = (1.0 - 1.0 / n) * ctx.phi_alpha / (2.0 * alpha) * (1.0 - p)
        if abs(rho + alpha) <= _BOUNDARY_TOL:
            out += (1.0 - 1.0 / n) / alpha ** 2 * a_val
        return out
    if alpha >= 1.0 and rho <= -1.0:
        mu = mu_f(model, w, x, mode="asymptotic", fn_method=ctx.fn_method,
                  spec=ctx.quad_spec)
        out = mu / n ** (1.0 / alpha)
        if abs(rho + 1.0) <= _BOUNDARY_TOL:
            out += (1.0 - n ** (-1.0 / alpha)) / alpha * a_val
        return out
    # rho > -min(1, alpha); read (n**(rho/alpha) - 1)/(rho/alpha) as ln(n) at 0
    if rho == 0.0:
        return math.log(n) / alpha * a_val
    return (n ** (rho / alpha) - 1.0) / (alpha * rho) * a_val


def c_var(ctx: ExpansionContext, p: float) -> float:
    """VaR concentration of the aggregate at level p."""
    lead = ctx.w.c1 * ctx.n ** (1.0 / ctx.alpha - 1.0)
    return lead * (1.0 + eps_p(ctx, p))


def c_cte(ctx: ExpansionContext, p: float) -> float:
    """CTE concentration of the aggregate at level p (tail index > 1)."""
    alpha = _alpha_gt_one(ctx, "c_cte")
    rho = ctx.model.rho
    factor = (alpha - 1.0) / (alpha - 1.0 - max(-1.0, rho))
    lead = ctx.w.c1 * ctx.n ** (1.0 / alpha - 1.0)
    return lead * (1.0 + factor * eps_p(ctx, p))


def _ratio_corrections(ctx: ExpansionContext, p: float) -> tuple:
    alpha, rho = ctx.alpha, ctx.model.rho
    x = level_quantile(ctx.model, p)
    a_val = _aux_at_level(ctx.model, x)
    mr = max(rho, -1.0)
    eps = eps_p(ctx, p)
    if math.isfinite(rho):
        a_term_var = a_val / (alpha * (alpha - 1.0 - rho))
        a_term_cte = a_val / (alpha - 1.0 - rho) ** 2
    else:
        a_term_var = a_term_cte = 0.0
    eps_term_var = mr / (alpha - 1.0 - mr) * eps
    eps_term_cte = alpha * mr / (alpha - 1.0 - mr) ** 2 * eps
    return a_term_var + eps_term_var, a_term_cte + eps_term_cte


def r_var(ctx: ExpansionContext, p: float) -> float:
    """Tail-VaR to VaR ratio of the aggregate at level p (tail index > 1)."""
    alpha = _alpha_gt_one(ctx, "r_var")
    corr, _ = _ratio_corrections(ctx, p)
    return alpha / (alpha - 1.0) * (1.0 + corr)


def r_cte(ctx: ExpansionContext, p: float) -> float:
    """Tail-CTE to CTE ratio of the aggregate at level p (additive correction)."""
    alpha = _alpha_gt_one(ctx, "r_cte")
    _, corr = _ratio_corrections(ctx, p)
    return alpha / (alpha - 1.0) + corr


def stop_loss(ctx: ExpansionContext, d: float) -> float:
    """Second-order stop-loss premium E[max(S - d, 0)] at retention d."""
    alpha = _alpha_gt_one(ctx, "stop_loss")
    if not d > 0.0:
        raise ValueError("retention must be positive")
    dp = d / ctx.w.c1
    if dp < float(ctx.model.quantile(0.9)):
        warnings.warn("stop_loss retention is not deep in the tail; the "
                      "asymptotic approximation may be poor", stacklevel=2)
    fbar = float(ctx.model.survival(dp))
    correction = (eps_x(ctx, dp)
                  + aux_A_star(ctx, dp) / (alpha - 1.0 - ctx.rho_star))
    return ctx.n * d / (alpha - 1.0) * fbar * (1.0 + correction)


MEASURES = ("var", "cte")


def premium(ctx: ExpansionContext, p: float, tau: float, measure: str) -> float:
    """Reinsurance premium delivering excess return on capital tau.

    The premium is affine in tau: K * (tau + (1 - tau) * R(p)) with K the
    capital at level p under the chosen measure and R the matching
    tail-measure ratio, expanded to second order.
    """
    alpha = _alpha_gt_one(ctx, "premium")
    if not 0.0 < tau < 1.0:
        raise ValueError("tau must be in (0, 1)")
    if measure not in MEASURES:
        raise UnsupportedError(f"unknown measure {measure!r}")
    model = ctx.model
    rho = model.rho
    q = level_quantile(model, p)
    a_val = _aux_at_level(model, q)
    eps = eps_p(ctx, p)
    mr = max(rho, -1.0)
    lead = (alpha - tau) / (alpha - 1.0)
    if math.isfinite(rho):
        a_var = a_val / (alpha * (alpha - 1.0 - rho))
        a_cte = a_val / (alpha - 1.0 - rho) ** 2
        cte_scale = 1.0 + a_val / (alpha * (alpha - 1.0 - rho))
    else:
        a_var = a_cte = 0.0
        cte_scale = 1.0
    if measure == "var":
        corr = a_var + mr / (alpha - 1.0 - mr) * eps
        return (ctx.n * q * c_var(ctx, p)
                * (lead + alpha * (1.0 - tau) / (alpha - 1.0) * corr))
    corr = a_cte + alpha * mr / (alpha - 1.0 - mr) ** 2 * eps
    # capital under the CTE measure carries the mean-excess factor
    # alpha/(alpha-1) relative to the quantile
    cte_x = alpha / (alpha - 1.0) * q * cte_scale
    return ctx.n * cte_x * c_cte(ctx, p) * (lead + (1.0 - tau) * corr)


def hall_eps_p(model: TailModel, w, p: float) -> float:
    """Closed-form VaR concentration correction for Hall-class models.

    Fully explicit in (k1, k2, alpha, rho) and the normalized weights; the
    independent cross-check of :func:`eps_p` for models with Hall constants.
    """
    if model.hall is None:
        raise UnsupportedError(
            f"{model.describe()} has no Hall-class representation")
    if not 0.0 < p < 1.0:
        raise ValueError("probability level must be in (0, 1)")
    k1, k2 = model.hall
    alpha, rho = model.alpha, model.rho
    n, c2 = w.n, w.c2
    if alpha < 1.0 and rho <= -alpha:
        boundary = (k2 / k1) if abs(rho + alpha) <= _BOUNDARY_TOL else 0.0
        phi = phi_alpha_constant(alpha, c2, w.c_tilde)
        return (1.0 - 1.0 / n) / alpha * (phi / 2.0 - boundary) * (1.0 - p)
    if alpha == 1.0 and rho <= -1.0:
        return c2 * (1.0 / n - 1.0) * (1.0 - p) * math.log(1.0 - p)
    if alpha > 1.0 and rho <= -1.0:
        mean_sub = 0.0
        for k, ck in enumerate(w.normalized[1:]):
            if ck > 0.0:
                mean_sub += ck * _order_stat_mean(model, w.n - 1, w.n - 1 - k)
        boundary = (k2 * (n ** (-1.0 / alpha) - 1.0) / alpha
                    if abs(rho + 1.0) <= _BOUNDARY_TOL else 0.0)
        return (mean_sub / n ** (1.0 / alpha) + boundary) * ((1.0 - p) / k1) ** (1.0 / alpha)
    return (k2 * (n ** (rho / alpha) - 1.0) / alpha
            * ((1.0 - p) / k1) ** (-rho / alpha))


def _order_stat_mean(model: TailModel, m: int, rank: int) -> float:
    """E of the rank-th smallest of m iid draws (rank in 1..m)."""
    if m == 1:
        return model.raw_moment(1)
    coeff = math.exp(math.lgamma(m + 1) - math.lgamma(rank)
                     - math.lgamma(m - rank + 1))

    def grand(u):
        return (float(model.quantile(u)) * u ** (rank - 1)
                * (1.0 - u) ** (m - rank))

    return coeff * integrate(grand, 0.0, 1.0, right_order=1.0 / model.alpha)
