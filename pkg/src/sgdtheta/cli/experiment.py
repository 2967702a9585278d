"""Assemble a configured experiment and write its artifacts."""

import json
import platform
from pathlib import Path

import numpy as np
import scipy

from .. import __version__
from ..exceptions import NumericalFailure
from ..operators import SchlierenSystem, TomoOperator, build_parallel_tomo
from ..sampling import apply_noise, piecewise_constant_inclusions, shepp_logan, write_image, write_pgm
from ..solver import EquationSystem, check_admissibility, run

__all__ = ["build_problem", "admissibility_reports", "run_experiment", "ExperimentFailed"]


class ExperimentFailed(RuntimeError):
    """A method failed numerically; artifacts written so far are kept."""


def build_problem(cfg):
    """Return ``(operator, ground_truth_image, dataset)`` for ``cfg``."""
    p = cfg.problem
    if p.kind == "ct":
        op = TomoOperator(build_parallel_tomo(p.n, p.angles, p.lines))
        truth = shepp_logan(p.n, modified=p.phantom == "shepp_logan_modified")
    else:
        op = SchlierenSystem(p.n, p.directions, n_detectors=p.detectors)
        truth = piecewise_constant_inclusions(p.n)
    exact = op.apply(truth.ravel(), op.all_indices())
    dataset = apply_noise(cfg.noise, exact, op.data_weights)
    return op, truth, dataset


def admissibility_reports(cfg):
    return {name: check_admissibility(scfg, cfg.penalty.sigma) for name, scfg in cfg.methods}


def _manifest(cfg, dataset, reports, results):
    levels = {
        "realized": dataset.realized_levels().tolist(),
        "realized_total": dataset.total_level(use_apriori=False),
        "r": dataset.r,
    }
    if dataset.apriori is not None:
        levels["apriori"] = dataset.apriori.tolist()
        levels["apriori_total"] = dataset.total_level(use_apriori=True)
    return {
        "config_path": cfg.path,
        "config": cfg.echo,
        "methods": [{"name": name, "seed": scfg.seed, "step_rule": scfg.step_rule.value} for name, scfg in cfg.methods],
        "noise_levels": levels,
        "admissibility": {name: rep.as_dict() for name, rep in reports.items()},
        "results": results,
        "versions": {
            "sgdtheta": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
    }


def run_experiment(cfg, out_dir, log=print):
    """Run every configured method and write CSVs, images and ``manifest.json``.

    Returns the per-method result summaries. Raises :class:`ExperimentFailed`
    after writing partial artifacts if a method fails numerically.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    op, truth, dataset = build_problem(cfg)
    system = EquationSystem.from_dataset(op, dataset)
    reports = admissibility_reports(cfg)
    n = cfg.problem.n
    vmax = float(truth.max()) or 1.0

    write_image(out / "truth.bin", truth, kind=cfg.problem.kind)
    write_pgm(out / "truth.pgm", truth, 0.0, vmax)
    write_image(out / "data_noisy.bin", dataset.noisy, model=cfg.noise.model.value, seed=cfg.noise.seed,
                delta=dataset.realized_levels())

    xi0 = np.full(n * n, cfg.xi0)
    results = []
    failure = None
    for name, scfg in cfg.methods:
        log(f"[{name}] step_rule={scfg.step_rule.value} seed={scfg.seed} max_iters={scfg.max_iters}")
        try:
            hist = run(system, scfg, cfg.penalty, ground_truth=truth, xi0=xi0, method=name,
                       record_wall=cfg.wall_clock)
        except NumericalFailure as exc:
            if exc.history is not None:
                exc.history.to_csv(out / f"{name}.csv", include_wall=cfg.wall_clock)
            results.append({"name": name, "status": "numerical-failure", "message": str(exc),
                            "iteration": exc.iteration})
            failure = f"{name}: {exc}"
            break
        hist.to_csv(out / f"{name}.csv", include_wall=cfg.wall_clock)
        x = hist.final_state.x.reshape(n, n)
        write_image(out / f"{name}_final.bin", x, method=name, seed=scfg.seed, iterations=hist.final_state.n)
        write_pgm(out / f"{name}_final.pgm", x, 0.0, vmax)
        _, err = hist.column("rel_error")
        summary = {
            "name": name,
            "status": "ok",
            "iterations": hist.final_state.n,
            "final_rel_error": float(err[-1]),
            "min_rel_error": float(err.min()),
            "stopped_by_discrepancy": hist.stopped_by_discrepancy,
            "converged": hist.converged,
            "t_bar": hist.t_bar,
        }
        results.append(summary)
        log(f"[{name}] iterations={summary['iterations']} final_rel_error={summary['final_rel_error']:.6g}")

    manifest = _manifest(cfg, dataset, reports, results)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    if failure:
        raise ExperimentFailed(failure)
    return results
