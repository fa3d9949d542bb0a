"""Newton iteration around variable projection for nonlinear problems.

Each step linearizes ``L u + F(u) = f`` about the current field ``w`` in
terms of the *updated* field,

    L u + F'(w) u = f - F(w) + F'(w) w,

and solves that linear problem with :func:`varpro.varpro_solve`, so every
iterate (and the converged solution) is a network.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import nlsq
from .network import Architecture, RowTerms, network_output
from .problems.bvp import (
    ROLE_BOUNDARY,
    ROLE_PDE,
    BvpSpec,
    CollocationSet,
    field_state,
    operator_vector,
)
from .varpro import PerturbConfig, VarProblem, varpro_solve

log = logging.getLogger(__name__)


class NewtonIterationError(ArithmeticError):
    """Nonlinear terms evaluated to NaN/Inf during linearization."""

    def __init__(self, message, point):
        super().__init__(f"{message} at point {point}")
        self.point = point


@dataclass
class NewtonConfig:
    max_newton_iterations: int = 20
    newton_tolerance: float = 1e-8
    initial_guess: str = "zero_field"  # or "provided"

    def __post_init__(self):
        if self.newton_tolerance <= 0:
            raise ValueError("newton_tolerance must be positive")
        if self.initial_guess not in ("zero_field", "provided"):
            raise ValueError("initial_guess must be 'zero_field' or 'provided'")


@dataclass
class NewtonResult:
    theta: np.ndarray
    beta: np.ndarray
    converged: bool
    newton_iterations: int
    gn_iterations: int
    subiterations: int
    cost: float
    residual_norms: list[float] = field(default_factory=list)
    increment_norms: list[float] = field(default_factory=list)
    raw_residual_norms: list[float] = field(default_factory=list)
    raw_increment_norms: list[float] = field(default_factory=list)


def _linear_coef_rows(colloc: CollocationSet, rows, dcoef: dict, d: int) -> np.ndarray:
    """Per-row coefficient vectors of a state-dependent linear operator."""
    out = np.zeros((len(rows), colloc.terms.coef.shape[1]))
    for comp, c in dcoef.items():
        out[:, operator_vector({comp: 1.0}, d).argmax()] += np.broadcast_to(c, len(rows))
    return out


def _nonlinear_parts(problem: BvpSpec, colloc: CollocationSet, state: dict):
    """Values and linearization coefficients of F (PDE rows) and G (boundary
    rows), gathered per row. Rows without nonlinear terms get zeros."""
    nl = problem.nonlinear
    d = problem.dim
    n_rows = colloc.n_rows
    terms = colloc.terms
    value = np.zeros(n_rows)
    coef = np.zeros((n_rows, terms.coef.shape[1]))
    if nl is None:
        return value, coef
    blocks = [(ROLE_PDE, nl.F, nl.dF)]
    if nl.G is not None:
        blocks.append((ROLE_BOUNDARY, nl.G, nl.dG))
    for role, fn, dfn in blocks:
        rows = colloc.rows_with_role(role)
        if len(rows) == 0:
            continue
        pts = terms.point[_first_term_per_row(terms)[rows]]
        sub = {k: v[pts] for k, v in state.items()}
        val = np.asarray(fn(sub), dtype=float) * np.ones(len(rows))
        cf = _linear_coef_rows(colloc, rows, dfn(sub), d)
        bad = ~(np.all(np.isfinite(cf), axis=1) & np.isfinite(val))
        if np.any(bad):
            raise NewtonIterationError("non-finite nonlinear term", colloc.points[pts[np.argmax(bad)]])
        value[rows] = val
        coef[rows] = cf
    return value, coef


def linearize(problem: BvpSpec, colloc: CollocationSet, state: dict) -> tuple[RowTerms, np.ndarray]:
    """Row terms and right-hand side of the linear problem for ``u^{k+1}``.

    ``state`` holds the current field ``w`` and its derivatives at the
    collocation points. Nonlinear rows are single-term rows, so the
    linearization coefficients are added to the term of each such row.
    """
    terms = colloc.terms
    value, coef = _nonlinear_parts(problem, colloc, state)
    new_coef = terms.coef + coef[terms.row]
    # F'(w) w on each row's point
    wvec = np.stack(list(state.values()))
    lin_w = np.einsum("rc,cr->r", coef, wvec[:, terms.point[_first_term_per_row(terms)]])
    rhs = colloc.rhs - value + lin_w
    return RowTerms(terms.row, terms.point, new_coef, terms.n_rows), rhs


def _first_term_per_row(terms: RowTerms) -> np.ndarray:
    first = np.full(terms.n_rows, -1, dtype=np.intp)
    # iterate in reverse so the earliest term wins
    first[terms.row[::-1]] = np.arange(len(terms.row))[::-1]
    return first


def newton_residual(problem: BvpSpec, colloc: CollocationSet, arch: Architecture, theta, beta) -> np.ndarray:
    """``S - (L u + F(u))`` row by row for the network ``(theta, beta)``."""
    state = field_state(arch, theta, beta, colloc.points, problem.box, 2)
    value, _ = _nonlinear_parts(problem, colloc, state)
    wvec = np.stack(list(state.values()))
    per_term = np.einsum("tc,ct->t", colloc.terms.coef, wvec[:, colloc.terms.point])
    linear = np.asarray(colloc.terms.aggregator @ per_term)
    return colloc.rhs - linear - value


def newton_varpro_solve(problem: BvpSpec, colloc: CollocationSet, arch: Architecture, theta0,
                        config: NewtonConfig | None = None, perturb: PerturbConfig | None = None,
                        nlsq_config: nlsq.NlsqConfig | None = None, beta0=None,
                        rank_cutoff: float | None = None,
                        rng: np.random.Generator | None = None) -> NewtonResult:
    """Newton-VarPro iteration from ``u^0``.

    With ``initial_guess="zero_field"`` the start is ``beta = 0`` (u^0 = 0)
    on hidden parameters ``theta0``; with ``"provided"`` the caller passes
    ``beta0`` as well. Later Newton steps start the inner VarPro solve from
    the previous step's hidden parameters. Tolerances apply to RMS norms
    ``||R|| / sqrt(N + N_b)`` and ``||dU|| / sqrt(N)``. One generator
    (``rng`` or one seeded from ``perturb.seed``) feeds the restarts of all
    Newton steps.
    """
    config = config or NewtonConfig()
    perturb = perturb or PerturbConfig()
    theta = np.array(theta0, dtype=float)
    if config.initial_guess == "provided":
        if beta0 is None:
            raise ValueError("initial_guess='provided' needs beta0")
        beta = np.array(beta0, dtype=float)
    else:
        beta = np.zeros(arch.width)
    if rng is None:
        rng = np.random.default_rng(perturb.seed)
    n_rows, N = colloc.n_rows, colloc.n_points
    u_old = network_output(arch, theta, beta, colloc.points, problem.box)
    out = NewtonResult(theta, beta, False, 0, 0, 0, float("nan"))

    for k in range(config.max_newton_iterations):
        R = newton_residual(problem, colloc, arch, theta, beta)
        r_norm = float(np.linalg.norm(R))
        out.raw_residual_norms.append(r_norm)
        out.residual_norms.append(r_norm / np.sqrt(n_rows))
        if out.residual_norms[-1] < config.newton_tolerance:
            out.converged = True
            break
        state = field_state(arch, theta, beta, colloc.points, problem.box, 2)
        terms, rhs = linearize(problem, colloc, state)
        vp = VarProblem(arch, problem.box, colloc.points, terms, rhs, rank_cutoff)
        res = varpro_solve(vp, theta, perturb, nlsq_config, rng=rng)
        theta, beta = res.theta, res.beta
        out.newton_iterations += 1
        out.gn_iterations += res.gn_iterations
        out.subiterations += res.subiterations
        out.cost = res.cost
        u_new = network_output(arch, theta, beta, colloc.points, problem.box)
        dU = float(np.linalg.norm(u_new - u_old))
        u_old = u_new
        out.raw_increment_norms.append(dU)
        out.increment_norms.append(dU / np.sqrt(N))
        log.debug("newton %d: |R|=%.3e |dU|=%.3e cost=%.3e", k, out.residual_norms[-1],
                  out.increment_norms[-1], res.cost)
        if problem.nonlinear is None:
            # the linearization does not depend on w: one step is exact
            out.converged = True
            break
        if out.increment_norms[-1] < config.newton_tolerance:
            out.converged = True
            break
    out.theta, out.beta = theta, beta
    return out
