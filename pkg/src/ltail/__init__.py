"""Tail approximations and risk measures for weighted order-statistic sums."""

from .aggregate import (EmpiricalSummary, MonteCarloFn, WeightScheme,
                        empirical_cte, empirical_tail, empirical_tcte,
                        empirical_var, exact_tail_n2, make_weights,
                        moment_s_prev, mu_f, pareto_exact_eps, sample_lstat,
                        survival_fn, v_alpha)
from .distributions import (FAMILIES, TailModel, aux_A, h_limit, make_model,
                            parse_model_spec, raw_moment, survival_deriv,
                            truncated_first_moment)
from .errors import (InfiniteMomentError, NoSecondOrderError,
                     UnsupportedError)
from .expansion import (ExpansionContext, aux_A_star, d_coeff, delta_max,
                        eps_x, make_context, remainder_scale, tail_approx,
                        tail_with_proxy)
from .numerics import (ConvergenceError, QuadratureSpec, beta_fn, integral_I,
                       integrate, kappa_series, ln_gamma, normal_quantile,
                       reg_inc_beta, t_quantile)
from .risk import (c_cte, c_var, eps_p, hall_eps_p, premium, r_cte, r_var,
                   stop_loss)

__version__ = "0.1.0"

__all__ = [
    "ConvergenceError", "EmpiricalSummary", "ExpansionContext", "FAMILIES",
    "InfiniteMomentError", "MonteCarloFn", "NoSecondOrderError",
    "QuadratureSpec", "TailModel", "UnsupportedError", "WeightScheme",
    "aux_A", "aux_A_star", "beta_fn", "c_cte", "c_var", "d_coeff",
    "delta_max", "empirical_cte", "empirical_tail", "empirical_tcte",
    "empirical_var", "eps_p", "eps_x", "exact_tail_n2", "h_limit",
    "hall_eps_p", "integral_I", "integrate", "kappa_series", "ln_gamma",
    "make_context", "make_model", "make_weights", "moment_s_prev", "mu_f",
    "normal_quantile", "parse_model_spec", "pareto_exact_eps", "premium",
    "r_cte", "r_var", "raw_moment", "reg_inc_beta", "remainder_scale",
    "sample_lstat", "stop_loss", "survival_deriv", "survival_fn",
    "t_quantile", "tail_approx", "tail_with_proxy",
    "truncated_first_moment", "v_alpha",
]
