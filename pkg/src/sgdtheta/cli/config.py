"""INI experiment configuration.

Sections::

    [problem]   kind = ct | schlieren, n, n_angles | angles, lines,
                directions, detectors, phantom
    [noise]     model, delta_rel, kappa, r, seed
    [penalty]   variant = quadratic | nonneg | tv (long forms accepted), beta
    [solver]    any SolverConfig field, plus xi0 (constant initial dual)
    [methods]   names = comma separated method labels
    [method:X]  per-method overrides of [solver] keys
    [output]    dir, wall_clock

Methods without their own section fall back to built-in presets
(``sgd_theta``, ``sgd_ndp``, ``sgd_decaying``, ``sgd_constant``, ``landweber``,
``kaczmarz``).
"""

import configparser
import re
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from ..exceptions import ConfigError
from ..penalty import PdhgConfig, PenaltySpec, PenaltyVariant
from ..sampling.noise import NoiseModel, NoiseSpec
from ..solver.config import SolverConfig

__all__ = ["ProblemConfig", "ExperimentConfig", "load_config", "parse_config", "METHOD_PRESETS"]

METHOD_PRESETS = {
    "sgd_theta": {},
    "sgd_ndp": {"step_rule": "adaptive_ndp", "tau": "0"},
    "sgd_decaying": {"step_rule": "decaying", "tau": "0"},
    # mu0 = 0.18 with tau = 1.1 violates the constant-step condition (c3 < 0)
    "sgd_constant": {"step_rule": "constant_gated", "stop_rule": "discrepancy", "mu0": "0.1"},
    "landweber": {"selection": "full"},
    "kaczmarz": {"selection": "cyclic"},
}

_INT_FIELDS = {"batch_size", "max_iters", "seed", "presample_batches", "telemetry_stride"}
_BOOL_FIELDS = {"use_apriori_levels"}
_STR_FIELDS = {"step_rule", "stop_rule", "selection"}
_OPTIONAL = {"t_bar", "presample_batches", "telemetry_stride"}
_PENALTY_ALIASES = {"nonneg": "quadratic_nonneg", "tv": "quadratic_tv"}
_PDHG_KEYS = {"pdhg_max_iters": "max_iters", "pdhg_gap_tol": "gap_tol"}


@dataclass(frozen=True)
class ProblemConfig:
    kind: str
    n: int
    angles: Optional[np.ndarray] = None
    lines: Optional[int] = None
    directions: Optional[int] = None
    detectors: Optional[int] = None
    phantom: str = "shepp_logan"


@dataclass
class ExperimentConfig:
    problem: ProblemConfig
    noise: NoiseSpec
    penalty: PenaltySpec
    solver: SolverConfig
    methods: List[Tuple[str, SolverConfig]]
    xi0: float = 0.0
    output_dir: Optional[str] = None
    wall_clock: bool = False
    source: str = ""
    path: Optional[str] = None
    echo: dict = field(default_factory=dict)


class _Locator:
    """Maps (section, key) to source line numbers for diagnostics."""

    def __init__(self, text, origin):
        self.origin = origin
        self.lines = {}
        section = None
        for no, line in enumerate(text.splitlines(), 1):
            s = line.strip()
            m = re.match(r"\[(.+)\]", s)
            if m:
                section = m.group(1).strip()
                self.lines[(section, None)] = no
            elif section and "=" in s and not s.startswith(("#", ";")):
                self.lines[(section, s.split("=", 1)[0].strip().lower())] = no

    def error(self, section, key, msg):
        no = self.lines.get((section, key)) or self.lines.get((section, None))
        where = f"{self.origin}:{no}: " if no else f"{self.origin}: "
        field_name = f"[{section}] {key}" if key else f"[{section}]"
        return ConfigError(f"{where}{field_name}: {msg}")


def _get(sec, key, conv, loc, default=None, required=False):
    if key not in sec:
        if required:
            raise loc.error(sec.name, key, "missing required value")
        return default
    raw = sec[key].strip()
    try:
        return conv(raw)
    except (ValueError, TypeError) as exc:
        raise loc.error(sec.name, key, f"cannot parse {raw!r}: {exc}") from None


def _bool(raw):
    low = raw.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected a boolean")


def _float_list(raw):
    parts = [p for p in re.split(r"[,\s]+", raw) if p]
    return np.array([float(p) for p in parts])


def _parse_problem(cp, loc):
    if not cp.has_section("problem"):
        raise loc.error("problem", None, "section missing")
    sec = cp["problem"]
    kind = _get(sec, "kind", str, loc, required=True).lower()
    n = _get(sec, "n", int, loc, required=True)
    if kind == "ct":
        if "angles" in sec:
            angles = _get(sec, "angles", _float_list, loc)
        else:
            count = _get(sec, "n_angles", int, loc, required=True)
            if count < 1:
                raise loc.error("problem", "n_angles", "need at least one angle")
            angles = np.linspace(1.0, 180.0, count)
        if angles.size == 0:
            raise loc.error("problem", "angles", "angle list is empty")
        lines = _get(sec, "lines", int, loc, default=n)
        if n < 16:
            raise loc.error("problem", "n", "CT grid must be at least 16 (phantom size)")
        if lines < 1:
            raise loc.error("problem", "lines", "need at least one detector line")
        phantom = _get(sec, "phantom", str, loc, default="shepp_logan")
        if phantom not in ("shepp_logan", "shepp_logan_modified"):
            raise loc.error("problem", "phantom", f"unknown phantom {phantom!r}")
        return ProblemConfig("ct", n, angles=angles, lines=lines, phantom=phantom)
    if kind == "schlieren":
        directions = _get(sec, "directions", int, loc, required=True)
        if directions < 1:
            raise loc.error("problem", "directions", "need at least one direction")
        if n < 3:
            raise loc.error("problem", "n", "schlieren grid must be at least 3")
        detectors = _get(sec, "detectors", int, loc)
        return ProblemConfig("schlieren", n, directions=directions, detectors=detectors, phantom="inclusions")
    raise loc.error("problem", "kind", f"unknown problem kind {kind!r} (ct or schlieren)")


def _parse_noise(cp, loc, default_r):
    sec = cp["noise"] if cp.has_section("noise") else None
    if sec is None:
        return NoiseSpec(NoiseModel.GAUSSIAN, 0.0, None, default_r, 0)
    model = _get(sec, "model", str, loc, default="gaussian").lower()
    try:
        model = NoiseModel(model)
    except ValueError:
        raise loc.error("noise", "model", f"unknown noise model {model!r}") from None
    try:
        return NoiseSpec(
            model,
            _get(sec, "delta_rel", float, loc, default=0.0),
            _get(sec, "kappa", float, loc),
            _get(sec, "r", float, loc, default=default_r),
            _get(sec, "seed", int, loc, default=0),
        )
    except ValueError as exc:
        key = "kappa" if model is NoiseModel.SALT_PEPPER else "delta_rel"
        raise loc.error("noise", key, str(exc)) from None


def _parse_penalty(cp, loc, problem):
    sec = cp["penalty"] if cp.has_section("penalty") else None
    variant = _get(sec, "variant", str, loc, default="nonneg").lower() if sec is not None else "nonneg"
    dim = problem.n * problem.n
    variant = _PENALTY_ALIASES.get(variant, variant)
    try:
        v = PenaltyVariant(variant)
    except ValueError:
        raise loc.error("penalty", "variant", f"unknown penalty {variant!r}") from None
    if v is PenaltyVariant.QUADRATIC_TV:
        beta = _get(sec, "beta", float, loc, default=1.0)
        if not beta > 0:
            raise loc.error("penalty", "beta", "beta must be positive")
        return PenaltySpec.tv((problem.n, problem.n), beta)
    return PenaltySpec(v, dim)


def _solver_kwargs(sec, loc, base=None):
    kw = dict(base or {})
    names = {f.name for f in fields(SolverConfig)}
    pdhg = dict(kw.pop("_pdhg", {}))
    for key in sec:
        if key == "xi0":
            continue
        if key in _PDHG_KEYS:
            conv = int if key == "pdhg_max_iters" else float
            pdhg[_PDHG_KEYS[key]] = _get(sec, key, conv, loc)
            continue
        if key not in names or key == "pdhg":
            raise loc.error(sec.name, key, "unknown solver setting")
        raw = sec[key].strip()
        if key in _OPTIONAL and raw.lower() in ("", "none", "auto"):
            kw[key] = None
        elif key in _INT_FIELDS:
            kw[key] = _get(sec, key, int, loc)
        elif key in _BOOL_FIELDS:
            kw[key] = _get(sec, key, _bool, loc)
        elif key in _STR_FIELDS:
            kw[key] = raw.lower()
        else:
            kw[key] = _get(sec, key, float, loc)
    kw["_pdhg"] = pdhg
    return kw


def _build_solver(kw, loc, section):
    kw = dict(kw)
    pdhg = kw.pop("_pdhg", {})
    try:
        if pdhg:
            kw["pdhg"] = PdhgConfig(**pdhg)
        return SolverConfig(**kw)
    except (ConfigError, ValueError) as exc:
        key = None
        for name in kw:
            if re.search(rf"\b{name}\b", str(exc)):
                key = name
                break
        raise loc.error(section, key, str(exc)) from None


def parse_config(text, origin="<config>"):
    """Parse INI ``text`` into an :class:`ExperimentConfig`."""
    loc = _Locator(text, origin)
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    try:
        cp.read_string(text, source=origin)
    except configparser.Error as exc:
        raise ConfigError(f"{origin}: {exc}") from None

    problem = _parse_problem(cp, loc)
    solver_sec = cp["solver"] if cp.has_section("solver") else cp["DEFAULT"]
    base_kw = _solver_kwargs(solver_sec, loc)
    solver = _build_solver(base_kw, loc, "solver")
    xi0 = _get(solver_sec, "xi0", float, loc, default=0.0)
    noise = _parse_noise(cp, loc, solver.r)
    penalty = _parse_penalty(cp, loc, problem)

    if cp.has_section("methods"):
        raw = cp["methods"].get("names", "")
        names = [m.strip() for m in raw.split(",") if m.strip()]
        if not names:
            raise loc.error("methods", "names", "no methods listed")
    else:
        names = ["sgd_theta"]
    methods = []
    for k, name in enumerate(names):
        if not re.fullmatch(r"[A-Za-z0-9_.-]+", name):
            raise loc.error("methods", "names", f"invalid method label {name!r}")
        section = f"method:{name}"
        if cp.has_section(section):
            kw = _solver_kwargs(cp[section], loc, base_kw)
        elif name in METHOD_PRESETS:
            kw = dict(base_kw)
            kw.update({key: (value if key in _STR_FIELDS else float(value)) for key, value in METHOD_PRESETS[name].items()})
        else:
            raise loc.error("methods", "names", f"method {name!r} has no [{section}] section and no preset")
        kw["seed"] = base_kw.get("seed", 0) + k
        methods.append((name, _build_solver(kw, loc, section if cp.has_section(section) else "solver")))

    out = cp["output"] if cp.has_section("output") else None
    output_dir = _get(out, "dir", str, loc) if out is not None else None
    wall = _get(out, "wall_clock", _bool, loc, default=False) if out is not None else False
    echo = {s: dict(cp[s]) for s in cp.sections()}
    return ExperimentConfig(problem, noise, penalty, solver, methods, xi0, output_dir, wall, text, origin, echo)


def load_config(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc}") from None
    return parse_config(text, str(path))
