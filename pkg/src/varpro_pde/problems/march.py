"""Block time marching for space-time problems.

The time interval is cut into equal blocks that are solved one after the
other. Each block after the first takes its initial data (u, and u_t for
second-order-in-time problems) from the previous block's network at the
interface time.
"""
from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from ..linalg import NonFiniteError
from ..network import Architecture, DomainBox
from .bvp import ROLE_INITIAL, BvpSpec, ErrorReport, FaceCondition, evaluate_errors, field_state

log = logging.getLogger(__name__)


@dataclass
class BlockMarchConfig:
    n_blocks: int = 1
    warm_start: bool = True  # start block k+1 from block k's hidden parameters
    Q2: int = 101

    def __post_init__(self):
        if self.n_blocks < 1:
            raise ValueError("n_blocks must be >= 1")


@dataclass
class MarchResult:
    problems: list[BvpSpec] = field(default_factory=list)
    solutions: list[Any] = field(default_factory=list)
    block_errors: list[ErrorReport] = field(default_factory=list)
    overall: ErrorReport | None = None
    failed_block: int | None = None
    failure: str | None = None

    @property
    def completed(self) -> bool:
        return self.failed_block is None


def split_time(problem: BvpSpec, n_blocks: int) -> list[DomainBox]:
    if problem.time_axis is None:
        raise ValueError(f"problem {problem.name!r} is not time-dependent")
    k = problem.time_axis
    lo, hi = problem.box.lower, problem.box.upper
    cuts = np.linspace(lo[k], hi[k], n_blocks + 1)
    boxes = []
    for a, b in zip(cuts[:-1], cuts[1:]):
        l, u = list(lo), list(hi)
        l[k], u[k] = float(a), float(b)
        boxes.append(DomainBox(tuple(l), tuple(u)))
    return boxes


def _interface_data(arch, theta, beta, box, operator):
    def data(points):
        state = field_state(arch, theta, beta, points, box, 2)
        out = np.zeros(len(points))
        for comp, c in operator.items():
            out += c * state[tuple(sorted(comp))]
        return out

    return data


def handoff(problem: BvpSpec, arch: Architecture, theta, beta, prev_box: DomainBox) -> BvpSpec:
    """Replace the initial-face data of ``problem`` by the previous block's
    network values (under each condition's own operator)."""
    t = problem.time_axis
    conds = []
    for c in problem.conditions:
        if isinstance(c, FaceCondition) and c.role == ROLE_INITIAL and c.axis == t and c.side == "lower":
            c = dataclasses.replace(c, data=_interface_data(arch, theta, beta, prev_box, c.operator))
        conds.append(c)
    return problem.with_conditions(conds)


def block_march(problem: BvpSpec, config: BlockMarchConfig, solver: Callable[[BvpSpec, np.ndarray], Any],
                arch: Architecture, theta0) -> MarchResult:
    """Solve ``problem`` block by block.

    ``solver(block_problem, theta_init)`` must return an object with
    ``theta`` and ``beta`` attributes. Solver failures (non-finite values)
    stop the march; the result then holds the blocks finished so far.
    """
    out = MarchResult()
    theta_init = np.asarray(theta0, dtype=float)
    prev = None
    for i, box in enumerate(split_time(problem, config.n_blocks)):
        block = problem.with_box(box)
        if prev is not None:
            block = handoff(block, arch, prev.theta, prev.beta, out.problems[-1].box)
        try:
            sol = solver(block, theta_init)
        except (NonFiniteError, ArithmeticError) as exc:
            out.failed_block, out.failure = i, str(exc)
            log.warning("block %d failed: %s", i, exc)
            break
        out.problems.append(block)
        out.solutions.append(sol)
        if problem.exact is not None:
            out.block_errors.append(evaluate_errors(arch, sol.theta, sol.beta, block, config.Q2))
            log.info("block %d: rms %.3e", i, out.block_errors[-1].rms_error)
        if config.warm_start:
            theta_init = np.asarray(sol.theta, dtype=float)
        prev = sol
    if out.block_errors:
        out.overall = ErrorReport.combine(out.block_errors)
    return out
