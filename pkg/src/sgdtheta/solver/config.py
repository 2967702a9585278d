"""Solver configuration and admissibility diagnostics."""

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Optional

from ..exceptions import ConfigError
from ..penalty import PdhgConfig

__all__ = [
    "StepRule",
    "StopRule",
    "Selection",
    "SolverConfig",
    "AdmissibilityReport",
    "check_admissibility",
]


class StepRule(str, enum.Enum):
    ADAPTIVE_DP = "adaptive_dp"
    ADAPTIVE_NDP = "adaptive_ndp"
    DECAYING = "decaying"
    CONSTANT_GATED = "constant_gated"


class StopRule(str, enum.Enum):
    APRIORI_MAX_ITERS = "apriori"
    APOSTERIORI_DISCREPANCY = "discrepancy"


class Selection(str, enum.Enum):
    """How the equations used in one step are chosen."""

    RANDOM = "random"
    CYCLIC = "cyclic"
    FULL = "full"


@dataclass(frozen=True)
class SolverConfig:
    """All parameters of one SGD-theta style run.

    ``tau`` is the discrepancy factor of the gated rules; the NDP rule
    ignores it. ``telemetry_stride`` controls how often the full residual is
    evaluated (``None``: once per epoch, ``ceil(N / batch_size)`` steps).
    ``t_bar`` is the constant step of ``CONSTANT_GATED``; ``None`` derives it
    from a presampling sweep at the initial iterate.
    """

    mu0: float = 0.18
    mu1: float = 1e4
    tau: float = 1.1
    p: float = 2.0
    r: float = 2.0
    eta: float = 0.0
    batch_size: int = 1
    max_iters: int = 1000
    seed: int = 0
    step_rule: StepRule = StepRule.ADAPTIVE_DP
    stop_rule: StopRule = StopRule.APRIORI_MAX_ITERS
    selection: Selection = Selection.RANDOM
    t0: float = 0.01
    alpha: float = 0.51
    t_bar: Optional[float] = None
    presample_batches: Optional[int] = None
    telemetry_stride: Optional[int] = None
    use_apriori_levels: bool = True
    pdhg: PdhgConfig = field(default_factory=PdhgConfig)

    def __post_init__(self):
        for name, enum_type in (("step_rule", StepRule), ("stop_rule", StopRule), ("selection", Selection)):
            try:
                object.__setattr__(self, name, enum_type(getattr(self, name)))
            except ValueError as exc:
                raise ConfigError(f"{name}: {exc}") from None
        if not self.r > 1 or math.isinf(self.r):
            raise ConfigError(f"r must satisfy 1 < r < inf, got {self.r}")
        if self.p != 2:
            raise ConfigError("only p = 2 penalties are implemented")
        if not 0 <= self.eta < 1:
            raise ConfigError(f"eta must lie in [0, 1), got {self.eta}")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.max_iters < 0:
            raise ConfigError("max_iters must be >= 0")
        if self.telemetry_stride is not None and self.telemetry_stride < 1:
            raise ConfigError("telemetry_stride must be >= 1")
        rule = self.step_rule
        if rule in (StepRule.ADAPTIVE_DP, StepRule.ADAPTIVE_NDP, StepRule.CONSTANT_GATED):
            if not (self.mu0 > 0 and self.mu1 > 0):
                raise ConfigError("mu0 and mu1 must be positive")
        if rule in (StepRule.ADAPTIVE_DP, StepRule.CONSTANT_GATED) and not self.tau > 1:
            raise ConfigError(f"tau must exceed 1 for {rule.value}, got {self.tau}")
        if self.stop_rule is StopRule.APOSTERIORI_DISCREPANCY and not self.tau > 1:
            raise ConfigError("the discrepancy stopping rule needs tau > 1")
        if rule is StepRule.DECAYING:
            if not 0.5 < self.alpha < 1:
                raise ConfigError(f"alpha must lie in (1/2, 1), got {self.alpha}")
            if not self.t0 > 0:
                raise ConfigError("t0 must be positive")
        if rule is StepRule.CONSTANT_GATED:
            if self.r != 2:
                raise ConfigError("constant_gated assumes Hilbert data spaces (r = 2)")
            if self.t_bar is not None and not self.t_bar > 0:
                raise ConfigError("t_bar must be positive")

    def with_(self, **changes):
        return replace(self, **changes)


@dataclass(frozen=True)
class AdmissibilityReport:
    """Constants of the descent estimates and whether the chosen rule is covered.

    ``c0`` governs the discrepancy-gated adaptive rule, ``c1`` its exact-data
    counterpart (diagnostic only) and ``c3`` the gated constant step.
    ``applicable`` is False for rules without an admissibility condition.
    """

    rule: StepRule
    c0: float
    c1: float
    c3: float
    applicable: bool
    passed: bool

    def lines(self):
        out = [f"rule = {self.rule.value}", f"c0 = {self.c0!r}", f"c1 = {self.c1!r}", f"c3 = {self.c3!r}"]
        if not self.applicable:
            out.append("status = not-applicable")
        else:
            out.append("status = pass" if self.passed else "status = FAIL")
        return out

    def as_dict(self):
        """JSON-friendly form; non-finite constants become ``None``."""

        def num(v):
            return v if math.isfinite(v) else None

        return {
            "rule": self.rule.value,
            "c0": num(self.c0),
            "c1": num(self.c1),
            "c3": num(self.c3),
            "applicable": self.applicable,
            "passed": self.passed,
        }


def check_admissibility(cfg, sigma):
    """Evaluate the admissibility constants for ``cfg`` and convexity modulus ``sigma``."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    p, eta, mu0 = cfg.p, cfg.eta, cfg.mu0
    smooth = (p - 1.0) / p * (mu0 / (2.0 * sigma)) ** (1.0 / (p - 1.0))
    tau = cfg.tau
    gate = (1.0 + eta) / tau if tau > 0 else math.inf
    c0 = 1.0 - eta - gate - smooth
    c1 = 1.0 - eta - smooth
    c3 = 1.0 - eta - mu0 / (4.0 * sigma) - (1.0 + eta) / 2.0 - ((1.0 + eta) / (2.0 * tau * tau) if tau > 0 else math.inf)
    if cfg.step_rule is StepRule.ADAPTIVE_DP:
        return AdmissibilityReport(cfg.step_rule, c0, c1, c3, True, c0 > 0)
    if cfg.step_rule is StepRule.CONSTANT_GATED:
        return AdmissibilityReport(cfg.step_rule, c0, c1, c3, True, c3 > 0)
    return AdmissibilityReport(cfg.step_rule, c0, c1, c3, False, True)
