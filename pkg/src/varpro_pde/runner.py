"""Declarative solve configs, reports and the fixed CSV row format."""
from __future__ import annotations

import csv
import dataclasses
import io
import math
import time
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .activations import ACTIVATIONS
from .linalg import NonFiniteError
from .network import Architecture
from .newton import NewtonConfig, NewtonIterationError, newton_varpro_solve
from .nlsq import NlsqConfig
from .problems import (
    BlockMarchConfig,
    ErrorReport,
    block_march,
    build_collocation,
    evaluate_errors,
)
from .problems.catalog import get_problem, problem_names
from .varpro import PerturbConfig, VarProblem, varpro_solve

METHODS = ("varpro", "elm")

CSV_SCHEMA_VERSION = 1
CSV_FIELDS = (
    "problem", "method", "seed", "M", "Q1", "activation", "R_m", "delta", "p",
    "subiters", "gn_iters", "newton_iters", "cost", "max_err", "rms_err", "wall_s",
)
_INT_FIELDS = {"seed", "M", "Q1", "subiters", "gn_iters", "newton_iters"}
_STR_FIELDS = {"problem", "method", "activation"}
KEY_FIELDS = ("problem", "seed", "M", "Q1", "activation", "R_m")


class ConfigError(ValueError):
    """Invalid run configuration; ``field`` names the offending key."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


class SolverFailure(RuntimeError):
    """A solve aborted on non-finite values."""

    def __init__(self, message: str, report: "SolveReport | None" = None):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True)
class RunConfig:
    problem: str
    layers: tuple[int, ...] = (2, 100, 1)
    activation: str = "cos"
    Q1: int = 20
    Q2: int = 101
    R_m: float = 1.0
    seed: int = 1
    delta: float = 0.0
    p: float = 0.5
    max_subiterations: int = 0
    cost_threshold: float = 1e-12
    ftol: float = 1e-8
    xtol: float = 1e-8
    gtol: float = 1e-8
    max_iterations: int = 1000
    max_newton_iterations: int = 20
    newton_tolerance: float = 1e-8
    n_blocks: int = 1
    warm_start: bool = True
    t_final: float | None = None
    method: str = "varpro"

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(int(w) for w in self.layers))
        if self.problem not in problem_names():
            raise ConfigError("problem", f"unknown problem {self.problem!r}; choose from {', '.join(problem_names())}")
        if self.activation not in ACTIVATIONS:
            raise ConfigError("activation", f"unknown activation {self.activation!r}; choose from {', '.join(ACTIVATIONS)}")
        if self.method not in METHODS:
            raise ConfigError("method", f"must be one of {', '.join(METHODS)}")
        if len(self.layers) < 3 or self.layers[-1] != 1 or min(self.layers) < 1:
            raise ConfigError("layers", "expected [d, M1, ..., 1] with positive widths")
        if self.Q1 < 2:
            raise ConfigError("Q1", "must be >= 2")
        if self.Q2 < self.Q1:
            raise ConfigError("Q2", "must be >= Q1")
        if self.R_m <= 0:
            raise ConfigError("R_m", "must be positive")
        if self.n_blocks < 1:
            raise ConfigError("n_blocks", "must be >= 1")
        if self.t_final is not None and self.problem != "advection1d":
            raise ConfigError("t_final", "only the advection problem takes t_final")
        checks = {
            "delta": self.delta >= 0,
            "p": 0.0 <= self.p <= 1.0,
            "max_subiterations": self.max_subiterations >= 0,
            "max_iterations": self.max_iterations >= 0,
            "ftol": 0.0 < self.ftol < 1.0,
            "xtol": 0.0 < self.xtol < 1.0,
            "gtol": 0.0 < self.gtol < 1.0,
            "max_newton_iterations": self.max_newton_iterations >= 0,
        }
        for name, ok in checks.items():
            if not ok:
                raise ConfigError(name, f"out of range: {getattr(self, name)!r}")
        if self.newton_tolerance <= 0:
            raise ConfigError("newton_tolerance", "must be positive")

    @property
    def M(self) -> int:
        return self.layers[-2]

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        data = dict(data)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known - {"M"}
        if unknown:
            name = sorted(unknown)[0]
            raise ConfigError(name, "unknown config key")
        if "problem" not in data:
            raise ConfigError("problem", "missing")
        if "M" in data:
            layers = list(data.get("layers", cls.layers))
            layers[-2] = int(data.pop("M"))
            data["layers"] = layers
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError("config", str(exc)) from None

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["layers"] = list(self.layers)
        if d["t_final"] is None:
            del d["t_final"]
        return d

    def replace(self, **changes) -> "RunConfig":
        return RunConfig.from_dict({**self.to_dict(), **changes})

    def perturb_config(self) -> PerturbConfig:
        if self.method == "elm":
            return PerturbConfig(0.0, self.p, 0, self.cost_threshold)
        return PerturbConfig(self.delta, self.p, self.max_subiterations, self.cost_threshold)

    def nlsq_config(self) -> NlsqConfig:
        max_it = 0 if self.method == "elm" else self.max_iterations
        return NlsqConfig(max_it, self.ftol, self.xtol, self.gtol)


@dataclass
class BlockReport:
    cost: float
    gn_iterations: int
    newton_iterations: int
    subiterations: int
    converged: bool
    errors: ErrorReport | None


@dataclass
class SolveReport:
    config: RunConfig
    cost: float
    gn_iterations: int
    newton_iterations: int
    subiterations: int
    errors: ErrorReport
    converged: bool
    wall_s: float
    blocks: list[BlockReport] = field(default_factory=list)
    theta: list[np.ndarray] = field(default_factory=list, repr=False)
    beta: list[np.ndarray] = field(default_factory=list, repr=False)
    failure: str | None = None

    @property
    def seed(self) -> int:
        return self.config.seed

    def csv_row(self) -> dict:
        c = self.config
        return {
            "problem": c.problem, "method": c.method, "seed": c.seed, "M": c.M, "Q1": c.Q1,
            "activation": c.activation, "R_m": c.R_m, "delta": c.delta, "p": c.p,
            "subiters": self.subiterations, "gn_iters": self.gn_iterations,
            "newton_iters": self.newton_iterations, "cost": self.cost,
            "max_err": self.errors.max_error, "rms_err": self.errors.rms_error, "wall_s": self.wall_s,
        }

    def to_json(self) -> dict:
        """Full-precision sidecar content."""
        return {
            "schema_version": CSV_SCHEMA_VERSION,
            "config": self.config.to_dict(),
            "cost": self.cost,
            "gn_iterations": self.gn_iterations,
            "newton_iterations": self.newton_iterations,
            "subiterations": self.subiterations,
            "converged": self.converged,
            "max_error": self.errors.max_error,
            "rms_error": self.errors.rms_error,
            "wall_s": self.wall_s,
            "failure": self.failure,
            "blocks": [
                {**dataclasses.asdict(b), "errors": dataclasses.asdict(b.errors) if b.errors else None}
                for b in self.blocks
            ],
            "seed_note": "seeds drive numpy PCG64 streams; not value-compatible with other libraries",
        }


def seed_streams(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    """Independent PCG64 generators for theta0 and for the restarts."""
    init_ss, perturb_ss = np.random.SeedSequence(seed).spawn(2)
    return np.random.Generator(np.random.PCG64(init_ss)), np.random.Generator(np.random.PCG64(perturb_ss))


def initial_theta(config: RunConfig) -> np.ndarray:
    arch = Architecture(config.layers, config.activation)
    return arch.random_theta(seed_streams(config.seed)[0], config.R_m)


def _block_solver(config: RunConfig, arch: Architecture, rng):
    perturb, nlsq_cfg = config.perturb_config(), config.nlsq_config()
    newton_cfg = NewtonConfig(config.max_newton_iterations, config.newton_tolerance)

    def solve(problem, theta0):
        colloc = build_collocation(problem, config.Q1)
        if problem.nonlinear is None:
            vp = VarProblem(arch, problem.box, colloc.points, colloc.terms, colloc.rhs)
            res = varpro_solve(vp, theta0, perturb, nlsq_cfg, rng=rng)
            return BlockReport(res.cost, res.gn_iterations, 0, res.subiterations, True, None), res
        res = newton_varpro_solve(problem, colloc, arch, theta0, newton_cfg, perturb, nlsq_cfg, rng=rng)
        return BlockReport(res.cost, res.gn_iterations, res.newton_iterations, res.subiterations,
                           res.converged, None), res

    return solve


def run(config: RunConfig) -> SolveReport:
    """Solve one configuration. Raises :class:`SolverFailure` on a
    non-finite abort (with the partial report attached)."""
    kwargs = {} if config.t_final is None else {"t_final": config.t_final}
    problem = get_problem(config.problem, **kwargs)
    arch = Architecture(config.layers, config.activation)
    init_rng, perturb_rng = seed_streams(config.seed)
    theta0 = arch.random_theta(init_rng, config.R_m)
    solve = _block_solver(config, arch, perturb_rng)
    blocks: list[BlockReport] = []
    sols = []

    def tracked(block_problem, th):
        rep, res = solve(block_problem, th)
        blocks.append(rep)
        sols.append(res)
        return res

    start = time.perf_counter()
    failure = None
    if problem.time_axis is not None:
        march = block_march(problem, BlockMarchConfig(config.n_blocks, config.warm_start, config.Q2),
                            tracked, arch, theta0)
        for rep, err in zip(blocks, march.block_errors):
            rep.errors = err
        errors = march.overall or ErrorReport(math.nan, math.nan, 0)
        failure = march.failure
    else:
        if config.n_blocks != 1:
            raise ConfigError("n_blocks", f"problem {problem.name!r} has no time axis")
        try:
            res = tracked(problem, theta0)
        except (NonFiniteError, NewtonIterationError) as exc:
            failure, res = str(exc), None
        if res is not None:
            errors = evaluate_errors(arch, res.theta, res.beta, problem, config.Q2)
            blocks[0].errors = errors
        else:
            errors = ErrorReport(math.nan, math.nan, 0)
    wall = time.perf_counter() - start

    report = SolveReport(
        config=config,
        cost=float(sum(b.cost for b in blocks)) if blocks else math.nan,
        gn_iterations=sum(b.gn_iterations for b in blocks),
        newton_iterations=sum(b.newton_iterations for b in blocks),
        subiterations=sum(b.subiterations for b in blocks),
        errors=errors,
        converged=failure is None and all(b.converged for b in blocks),
        wall_s=wall,
        blocks=blocks,
        theta=[np.asarray(s.theta) for s in sols],
        beta=[np.asarray(s.beta) for s in sols],
        failure=failure,
    )
    if failure is not None:
        raise SolverFailure(failure, report)
    return report


# --- CSV -----------------------------------------------------------------

def format_value(name: str, value: Any) -> str:
    if name in _STR_FIELDS:
        return str(value)
    if name in _INT_FIELDS:
        return str(int(value))
    return f"{float(value):.5e}"


def parse_value(name: str, text: str) -> Any:
    if name in _STR_FIELDS:
        return text
    if name in _INT_FIELDS:
        return int(text)
    return float(text)


def format_rows(rows: list[dict], header: bool = True) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if header:
        buf.write(f"# varpro-pde csv v{CSV_SCHEMA_VERSION}\n")
        w.writerow(CSV_FIELDS)
    for row in rows:
        w.writerow([format_value(k, row[k]) for k in CSV_FIELDS])
    return buf.getvalue()


def parse_rows(text: str) -> list[dict]:
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    reader = csv.reader(lines)
    try:
        header = next(reader)
    except StopIteration:
        return []
    if tuple(header) != CSV_FIELDS:
        raise ValueError(f"unexpected CSV header {header}")
    return [{k: parse_value(k, v) for k, v in zip(header, rec)} for rec in reader]
