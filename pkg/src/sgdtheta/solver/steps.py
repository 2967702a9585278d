"""Step-size rules."""

import math

from .config import StepRule

__all__ = ["step_size", "adaptive_step"]


def adaptive_step(res_norm, grad_norm, mu0, mu1, p, r):
    """Residual-adaptive step ``min(mu0 |res|^{p(r-1)} / |g|^p, mu1) |res|^{p-r}``.

    A vanishing gradient selects the cap ``mu1``; a vanishing residual gives 0.
    """
    if res_norm == 0.0:
        return 0.0
    if grad_norm == 0.0:
        capped = mu1
    else:
        # ratio of powers in log space keeps tiny/huge residuals finite
        log_ratio = p * (r - 1.0) * math.log(res_norm) - p * math.log(grad_norm)
        capped = mu1 if log_ratio > math.log(mu1 / mu0) else mu0 * math.exp(log_ratio)
    return capped * res_norm ** (p - r)


def step_size(cfg, n, res_norm, grad_norm, delta_batch, gate=True):
    """Step size of step ``n`` under ``cfg.step_rule``.

    Parameters
    ----------
    cfg : SolverConfig
    n : int
        Step number, counted from 1 (the step leading from iterate ``n - 1``
        to iterate ``n``).
    res_norm : float
        ``||res||_r`` of the (stacked) batch residual.
    grad_norm : float
        Norm of ``sum F_i'(x)^* J_r(res_i)``.
    delta_batch : float
        ``(sum_{i in batch} delta_i^r)^{1/r}``.
    gate : bool
        Full-residual test of the gated constant rule (``True`` while the
        total discrepancy still exceeds its threshold).
    """
    rule = cfg.step_rule
    if not (math.isfinite(res_norm) and math.isfinite(grad_norm)):
        raise ArithmeticError("non-finite residual or gradient norm")
    if rule is StepRule.ADAPTIVE_DP:
        if res_norm <= cfg.tau * delta_batch:
            return 0.0
        return adaptive_step(res_norm, grad_norm, cfg.mu0, cfg.mu1, cfg.p, cfg.r)
    if rule is StepRule.ADAPTIVE_NDP:
        return adaptive_step(res_norm, grad_norm, cfg.mu0, cfg.mu1, cfg.p, cfg.r)
    if rule is StepRule.DECAYING:
        if n < 1:
            raise ValueError("decaying steps are numbered from 1")
        return cfg.t0 * float(n) ** (-cfg.alpha)
    if cfg.t_bar is None:
        raise ValueError("constant_gated needs t_bar (run() derives it by presampling)")
    return cfg.t_bar if gate else 0.0
