"""Self-check battery behind ``sgdtheta check``.

Every check returns a :class:`CheckResult` holding the measured value and
the tolerance it was compared against.
"""

import itertools
from dataclasses import dataclass
from importlib import resources

import numpy as np

from ..operators import SchlierenSystem, TomoOperator, build_parallel_tomo
from ..operators.schlieren import schlieren_apply, schlieren_derivative_adjoint, schlieren_derivative_apply
from ..penalty import PdhgConfig, PenaltySpec, tv_denoise_pdhg
from ..sampling import NoiseModel, NoiseSpec, apply_noise, shepp_logan
from ..spaces import conj_exponent, duality_map, lr_norm
from ..solver import EquationSystem, SolverConfig, check_admissibility, run

__all__ = [
    "CheckResult",
    "adjoint_mismatch",
    "check_adjoint",
    "check_duality_map",
    "check_ct_adjoint",
    "check_schlieren_adjoint",
    "check_schlieren_derivative",
    "tv1d_prox_bruteforce",
    "check_tv_oracle",
    "check_monotonicity",
    "check_default_admissibility",
    "run_all",
]


@dataclass(frozen=True)
class CheckResult:
    name: str
    measured: float
    tolerance: float
    passed: bool
    detail: str = ""

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        extra = f"  ({self.detail})" if self.detail else ""
        return f"{status}  {self.name}: measured {self.measured:.3e}, tolerance {self.tolerance:.1e}{extra}"


def _rel(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def check_duality_map(n_vectors=100, dim=50, exponents=(1.1, 1.5, 2.0, 3.0), seed=0, tol=1e-10):
    """``<J_r y, y> = ||y||_r^r`` and ``||J_r y||_{r*} = ||y||_r^{r-1}``."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for r in exponents:
        rs = conj_exponent(r)
        for _ in range(n_vectors):
            y = rng.standard_normal(dim)
            j = duality_map(y, r)
            norm = lr_norm(y, r)
            worst = max(worst, _rel(float(np.dot(j, y)), norm ** r), _rel(lr_norm(j, rs), norm ** (r - 1)))
    return CheckResult("duality map identities", worst, tol, worst <= tol)


def adjoint_mismatch(forward, adjoint, n_in, n_out, pairs=20, seed=0, inner_in=None, inner_out=None):
    """Largest relative gap ``|<A x, y> - <x, A* y>|`` over random pairs."""
    rng = np.random.default_rng(seed)
    inner_in = inner_in or (lambda a, b: float(np.dot(a, b)))
    inner_out = inner_out or (lambda a, b: float(np.dot(a, b)))
    worst = 0.0
    for _ in range(pairs):
        x = rng.standard_normal(n_in)
        y = rng.standard_normal(n_out)
        lhs = inner_out(forward(x), y)
        rhs = inner_in(x, adjoint(y))
        worst = max(worst, abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-300))
    return worst


def check_adjoint(name, forward, adjoint, n_in, n_out, tol, pairs=20, seed=0, **inner):
    worst = adjoint_mismatch(forward, adjoint, n_in, n_out, pairs, seed, **inner)
    return CheckResult(name, worst, tol, worst <= tol)


def check_ct_adjoint(n=32, n_angles=32, pairs=20, tol=1e-12):
    block = build_parallel_tomo(n, np.linspace(1.0, 180.0, n_angles), n)
    a = block.to_csr()
    at = block.transpose().to_csr()
    return check_adjoint(f"CT adjoint (n={n})", lambda x: a @ x, lambda y: at @ y, block.cols, block.rows, tol, pairs)


def check_schlieren_adjoint(n=32, n_directions=4, pairs=20, tol=1e-8, seed=1):
    """``<F'(f) h, g>_W = <h, F'(f)^* g>_{H^1}`` at a random ``f``."""
    system = SchlierenSystem(n, n_directions)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for k in range(pairs):
        op = system.ops[k % n_directions]
        f = rng.standard_normal(n * n)
        worst = max(worst, adjoint_mismatch(
            lambda h: schlieren_derivative_apply(op, f, h),
            lambda g: schlieren_derivative_adjoint(op, f, g, system.poisson),
            n * n, op.n_detectors, pairs=1, seed=seed + k,
            inner_in=system.h1_inner,
            inner_out=lambda a, b: float(np.dot(op.weights * a, b)),
        ))
    return CheckResult(f"schlieren H1 adjoint (n={n})", worst, tol, worst <= tol)


def check_schlieren_derivative(n=32, n_directions=4, pairs=10, eps=1e-5, tol=1e-5, seed=2):
    """Derivative against central differences ``(F(f + eps h) - F(f - eps h)) / (2 eps)``."""
    system = SchlierenSystem(n, n_directions)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for k in range(pairs):
        op = system.ops[k % n_directions]
        f = rng.standard_normal(n * n)
        h = rng.standard_normal(n * n)
        fd = (schlieren_apply(op, f + eps * h) - schlieren_apply(op, f - eps * h)) / (2.0 * eps)
        exact = schlieren_derivative_apply(op, f, h)
        worst = max(worst, float(np.linalg.norm(fd - exact) / np.linalg.norm(exact)))
    return CheckResult("schlieren derivative vs finite differences", worst, tol, worst <= tol)


def tv1d_prox_bruteforce(g, beta):
    """Exact ``argmin_z 1/(2 beta) ||z - g||^2 + sum |z_{k+1} - z_k|``.

    Solves the dual box QP ``min 1/2 ||g - beta D^T u||^2, |u| <= 1`` by
    enumerating all ``3^(L-1)`` active sets (lower bound, free, upper bound)
    and keeping the best feasible stationary point; then ``z = g - beta D^T u``.
    """
    g = np.asarray(g, dtype=float)
    L = g.size
    if L == 1:
        return g.copy()
    d = np.zeros((L - 1, L))
    d[np.arange(L - 1), np.arange(L - 1)] = -1.0
    d[np.arange(L - 1), np.arange(1, L)] = 1.0
    bt = beta * d.T
    best, best_u = np.inf, None
    for pattern in itertools.product((-1, 0, 1), repeat=L - 1):
        pattern = np.array(pattern)
        free = pattern == 0
        u = pattern.astype(float)
        if free.any():
            rhs = g - bt[:, ~free] @ u[~free]
            sol, *_ = np.linalg.lstsq(bt[:, free], rhs, rcond=None)
            if np.any(np.abs(sol) > 1.0 + 1e-12):
                continue
            u[free] = sol
        val = 0.5 * float(np.sum((g - bt @ u) ** 2))
        if val < best - 1e-15:
            best, best_u = val, u
    return g - bt @ best_u


def check_tv_oracle(n_signals=50, max_len=5, tol=1e-3, seed=3, pdhg=None):
    """PDHG on ``1 x L`` images against :func:`tv1d_prox_bruteforce`."""
    rng = np.random.default_rng(seed)
    pdhg = pdhg or PdhgConfig(max_iters=20000, gap_tol=1e-12)
    worst = 0.0
    for _ in range(n_signals):
        L = int(rng.integers(1, max_len + 1))
        g = rng.uniform(-2.0, 2.0, L)
        beta = float(rng.uniform(0.2, 3.0))
        z = tv_denoise_pdhg(g.reshape(1, L), beta, pdhg).ravel()
        worst = max(worst, float(np.max(np.abs(z - tv1d_prox_bruteforce(g, beta)))))
    return CheckResult("TV prox vs brute-force 1D oracle", worst, tol, worst <= tol)


def check_monotonicity(n=16, iters=400, seeds=(0, 1), slack=1e-12):
    """Bregman distance to the truth never increases on a small noisy CT run."""
    op = TomoOperator(build_parallel_tomo(n, np.linspace(1.0, 180.0, 24), n))
    truth = shepp_logan(n).ravel()
    exact = op.matrix @ truth
    penalty = PenaltySpec.nonneg(n * n)
    worst = -np.inf
    for seed in seeds:
        data = apply_noise(NoiseSpec(NoiseModel.GAUSSIAN, 0.05, None, 2.0, seed), exact)
        cfg = SolverConfig(max_iters=iters, seed=seed, use_apriori_levels=False)
        hist = run(EquationSystem.from_dataset(op, data), cfg, penalty, ground_truth=truth)
        _, b = hist.column("bregman")
        worst = max(worst, float(np.max(np.diff(b))))
    return CheckResult("Bregman monotonicity (CT, realized noise levels)", worst, slack, worst <= slack,
                       "largest increase of the distance between consecutive iterates")


def check_default_admissibility():
    from .config import parse_config

    text = resources.files("sgdtheta").joinpath("configs/ct_desk.ini").read_text()
    cfg = parse_config(text, "ct_desk.ini")
    rep = check_admissibility(cfg.methods[0][1], cfg.penalty.sigma)
    return CheckResult("admissibility c0 of the shipped CT config", rep.c0, 0.0, rep.passed and rep.c0 > 0,
                       f"c0 = {rep.c0:.6g} must be positive")


def run_all():
    return [
        check_duality_map(),
        check_ct_adjoint(),
        check_schlieren_adjoint(),
        check_schlieren_derivative(),
        check_tv_oracle(),
        check_monotonicity(),
        check_default_admissibility(),
    ]
