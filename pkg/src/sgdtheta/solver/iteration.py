"""The stochastic mirror-descent iteration, its deterministic baselines and the run loop."""

import csv
import hashlib
import io
import math
import time
from dataclasses import dataclass, field, replace
from typing import List, Optional

import numpy as np

from ..exceptions import ConvergenceError, NumericalFailure
from ..penalty import BregmanPair, PdhgState, bregman_distance, mirror_step
from ..sampling.sampler import IndexSampler
from ..spaces import duality_map, lr_norm
from .config import Selection, StepRule, StopRule
from .steps import adaptive_step, step_size

__all__ = [
    "IterationState",
    "HistoryRecord",
    "RunHistory",
    "initial_state",
    "sgd_theta_step",
    "landweber_step",
    "kaczmarz_step",
    "cyclic_batch",
    "presample_t_bar",
    "run",
    "CSV_HEADER",
]

CSV_HEADER = ("iter", "step", "batch_residual", "total_sq_residual", "rel_error", "bregman", "seed_hash", "wall_ms")


@dataclass(frozen=True)
class IterationState:
    """Iterate pair, step counter, sampler and PDHG warm-start handle.

    ``n`` counts completed steps; the next random batch is ``sampler.batch(n)``.
    The sampler is only read, so states can share it.
    """

    pair: BregmanPair
    n: int
    sampler: Optional[IndexSampler] = None
    pdhg: Optional[PdhgState] = None

    @property
    def x(self):
        return self.pair.x

    @property
    def xi(self):
        return self.pair.xi


@dataclass
class HistoryRecord:
    """Telemetry for iterate ``n``; step fields describe the step that produced it."""

    n: int
    indices: Optional[np.ndarray] = None
    step: Optional[float] = None
    batch_residual: Optional[float] = None
    total_sq_residual: Optional[float] = None
    rel_error: Optional[float] = None
    bregman: Optional[float] = None
    wall_ms: Optional[float] = None


@dataclass
class RunHistory:
    """Append-only sequence of records plus run-level outcome."""

    method: str = "sgd"
    seed: int = 0
    records: List[HistoryRecord] = field(default_factory=list)
    stopped_by_discrepancy: bool = False
    converged: bool = True
    t_bar: Optional[float] = None
    final_state: Optional[IterationState] = None

    def append(self, rec):
        if self.records and rec.n <= self.records[-1].n:
            raise ValueError("history records must be strictly increasing in n")
        self.records.append(rec)

    def __len__(self):
        return len(self.records)

    @property
    def seed_hash(self):
        return hashlib.sha256(f"{self.method}:{self.seed}".encode()).hexdigest()[:16]

    def column(self, name):
        """``(n, value)`` arrays over records where ``name`` was computed."""
        pts = [(r.n, getattr(r, name)) for r in self.records if getattr(r, name) is not None]
        if not pts:
            return np.empty(0, dtype=np.int64), np.empty(0)
        n, v = zip(*pts)
        return np.asarray(n), np.asarray(v, dtype=float)

    def to_csv(self, path=None, include_wall=False):
        """CSV text (and file if ``path`` is given); wall times only on request."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        tag = self.seed_hash

        def fmt(v):
            return "" if v is None else repr(float(v))

        for r in self.records:
            wall = fmt(r.wall_ms) if include_wall else ""
            w.writerow([r.n, fmt(r.step), fmt(r.batch_residual), fmt(r.total_sq_residual),
                        fmt(r.rel_error), fmt(r.bregman), tag, wall])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        return text


def initial_state(system, penalty, cfg, xi0=None, seed_stream="batches"):
    """State at ``n = 0`` with ``x0 = mirror_step(xi0)`` (``xi0 = 0`` by default)."""
    dim = system.operator.in_dim
    xi0 = np.zeros(dim) if xi0 is None else np.array(xi0, dtype=float).reshape(dim)
    pdhg = PdhgState()
    pair = mirror_step(penalty, xi0, cfg.pdhg, pdhg)
    sampler = None
    if cfg.selection is Selection.RANDOM:
        sampler = IndexSampler(cfg.seed, system.n_equations, cfg.batch_size, seed_stream)
    return IterationState(pair, 0, sampler, pdhg)


def _batch_level(levels, idx, r):
    d = levels[idx]
    if not np.any(d):
        return 0.0
    return float(np.sum(d ** r) ** (1.0 / r))


def _grad_and_residual(system, x, idx, r):
    res = system.residual(x, idx)
    if not np.all(np.isfinite(res)):
        raise ArithmeticError("non-finite residual")
    res_norm = lr_norm(res.reshape(-1), r, _stacked_weights(system, len(idx)))
    g = system.operator.adjoint_sum(x, idx, duality_map(res, r))
    if not np.all(np.isfinite(g)):
        raise ArithmeticError("non-finite gradient")
    return res, res_norm, g


def _stacked_weights(system, count):
    w = system.weights
    return None if w is None else np.tile(w, count)


def _advance(state, system, cfg, penalty, idx, levels, gate=True, rule_cfg=None):
    """One mirror-descent step on the stacked equations ``idx``."""
    rule_cfg = rule_cfg or cfg
    idx = np.asarray(idx, dtype=np.int64)
    try:
        res, res_norm, g = _grad_and_residual(system, state.pair.x, idx, cfg.r)
        grad_norm = float(np.linalg.norm(g))
        t = step_size(rule_cfg, state.n + 1, res_norm, grad_norm, _batch_level(levels, idx, cfg.r), gate)
        if t == 0.0:
            pair = state.pair
        else:
            xi = state.pair.xi - t * g
            if not np.all(np.isfinite(xi)):
                raise ArithmeticError("non-finite dual iterate")
            pair = mirror_step(penalty, xi, cfg.pdhg, state.pdhg)
    except (ArithmeticError, ConvergenceError) as exc:
        if isinstance(exc, NumericalFailure):
            exc.iteration = state.n
            raise
        raise NumericalFailure(f"step {state.n + 1}: {exc}", iteration=state.n) from exc
    new = replace(state, pair=pair, n=state.n + 1)
    return new, HistoryRecord(n=new.n, indices=idx, step=t, batch_residual=res_norm)


def sgd_theta_step(state, system, cfg, penalty, levels=None, batch=None, gate=True):
    """One SGD-theta step on the random batch ``state.sampler.batch(state.n)``.

    ``batch`` overrides the drawn indices; ``levels`` defaults to the
    system's gating levels in the ``cfg.r`` norm.
    """
    if levels is None:
        levels = system.levels(cfg.r, cfg.use_apriori_levels)
    if batch is None:
        if state.sampler is None:
            raise ValueError("state carries no sampler; pass batch explicitly")
        batch = state.sampler.batch(state.n)
    return _advance(state, system, cfg, penalty, batch, levels, gate)


def landweber_step(state, system, cfg, penalty, levels=None):
    """Full-gradient step with the residual-gated adaptive rule on all equations."""
    if levels is None:
        levels = system.levels(cfg.r, cfg.use_apriori_levels)
    adaptive = (StepRule.ADAPTIVE_DP, StepRule.ADAPTIVE_NDP)
    rule_cfg = cfg if cfg.step_rule in adaptive else replace(cfg, step_rule=StepRule.ADAPTIVE_DP)
    return _advance(state, system, cfg, penalty, system.operator.all_indices(), levels, rule_cfg=rule_cfg)


def cyclic_batch(n, n_equations, batch_size=1):
    """Indices ``(n * b + k) mod N`` for ``k < b``, ascending."""
    return np.sort((n * batch_size + np.arange(batch_size)) % n_equations)


def kaczmarz_step(state, system, cfg, penalty, levels=None, gate=True):
    """SGD-theta update on the cyclic block instead of a random draw."""
    if levels is None:
        levels = system.levels(cfg.r, cfg.use_apriori_levels)
    idx = cyclic_batch(state.n, system.n_equations, cfg.batch_size)
    return _advance(state, system, cfg, penalty, idx, levels, gate)


def presample_t_bar(system, cfg, x, levels=None, batches=None, stream="presample"):
    """Smallest admissible constant step over a sweep of random batches at ``x``.

    Each batch contributes ``min(mu0 ||res||^2 / ||g||^2, mu1)``; batches with
    zero residual are skipped.
    """
    count = batches or cfg.presample_batches or int(math.ceil(system.n_equations / cfg.batch_size))
    sampler = IndexSampler(cfg.seed, system.n_equations, cfg.batch_size, stream)
    best = math.inf
    for k in range(count):
        idx = sampler.batch(k)
        _, res_norm, g = _grad_and_residual(system, x, idx, 2.0)
        if res_norm == 0.0:
            continue
        best = min(best, adaptive_step(res_norm, float(np.linalg.norm(g)), cfg.mu0, cfg.mu1, 2.0, 2.0))
    return cfg.mu1 if math.isinf(best) else best


def _discrepancy_threshold(cfg, levels):
    return float(np.sum((cfg.tau * levels) ** 2))


def run(system, cfg, penalty, ground_truth=None, xi0=None, method="sgd", record_wall=True):
    """Iterate until the stopping rule fires.

    Parameters
    ----------
    system : EquationSystem
    cfg : SolverConfig
    penalty : PenaltySpec
    ground_truth : ndarray, optional
        Enables relative-error and Bregman-distance telemetry at every step.
    xi0 : ndarray, optional
        Initial dual iterate (default 0).
    method : str
        Label used for the CSV seed hash.

    Returns
    -------
    RunHistory
        ``final_state`` holds the last state; ``converged`` is False when the
        discrepancy rule was requested but never satisfied.

    Raises
    ------
    NumericalFailure
        With ``history`` attached.
    """
    start = time.perf_counter()
    levels = system.levels(cfg.r, cfg.use_apriori_levels)
    state = initial_state(system, penalty, cfg, xi0)
    N = system.n_equations
    stride = cfg.telemetry_stride or max(1, int(math.ceil(N / cfg.batch_size)))
    threshold = _discrepancy_threshold(cfg, levels)
    needs_total = cfg.stop_rule is StopRule.APOSTERIORI_DISCREPANCY or cfg.step_rule is StepRule.CONSTANT_GATED

    if cfg.step_rule is StepRule.CONSTANT_GATED and cfg.t_bar is None:
        cfg = replace(cfg, t_bar=presample_t_bar(system, cfg, state.x, levels))
    history = RunHistory(method=method, seed=cfg.seed, t_bar=cfg.t_bar)

    truth = None
    if ground_truth is not None:
        truth = np.asarray(ground_truth, dtype=float).reshape(-1)
        truth_norm = float(np.linalg.norm(truth)) or 1.0

    def annotate(rec, st, with_total):
        if truth is not None:
            rec.rel_error = float(np.linalg.norm(st.x - truth)) / truth_norm
            rec.bregman = bregman_distance(penalty, truth, st.pair)
        if with_total:
            rec.total_sq_residual = system.total_sq_residual(st.x, cfg.r)
        if record_wall:
            rec.wall_ms = 1e3 * (time.perf_counter() - start)
        return rec

    def step(st, gate):
        if cfg.selection is Selection.FULL:
            return landweber_step(st, system, cfg, penalty, levels)
        if cfg.selection is Selection.CYCLIC:
            return kaczmarz_step(st, system, cfg, penalty, levels, gate)
        return sgd_theta_step(st, system, cfg, penalty, levels, gate=gate)

    rec = annotate(HistoryRecord(n=0), state, True)
    history.append(rec)
    gate = rec.total_sq_residual > threshold
    if cfg.stop_rule is StopRule.APOSTERIORI_DISCREPANCY and not gate:
        history.stopped_by_discrepancy = True
        history.final_state = state
        return history

    try:
        for k in range(cfg.max_iters):
            state, rec = step(state, gate)
            with_total = (k + 1) % stride == 0 or k + 1 == cfg.max_iters
            history.append(annotate(rec, state, with_total))
            if with_total and needs_total:
                gate = rec.total_sq_residual > threshold
                if cfg.stop_rule is StopRule.APOSTERIORI_DISCREPANCY and not gate:
                    history.stopped_by_discrepancy = True
                    break
    except NumericalFailure as exc:
        history.final_state = state
        exc.history = history
        raise
    if cfg.stop_rule is StopRule.APOSTERIORI_DISCREPANCY and not history.stopped_by_discrepancy:
        history.converged = False
    history.final_state = state
    return history
