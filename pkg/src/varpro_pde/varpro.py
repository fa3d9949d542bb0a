"""Variable projection for ``H(theta) beta = S``.

The output weights are eliminated through the minimum-norm least-squares
solution ``beta_ls(theta)``, leaving the reduced residual
``r(theta) = H beta_ls - S`` to be minimized over the hidden parameters.
The Jacobian of ``r`` keeps only the first (Kaufman) term of the exact
projection derivative.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import nlsq
from .linalg import MinNormSolver, matmul
from .network import Architecture, DomainBox, RowTerms, hidden_eval, param_jacobian_rows

log = logging.getLogger(__name__)


@dataclass
class AssembledSystem:
    H: np.ndarray
    S: np.ndarray
    beta_ls: np.ndarray
    theta: np.ndarray
    solver: MinNormSolver = field(repr=False)


@dataclass
class PerturbConfig:
    delta: float = 0.0
    p: float = 0.5
    max_subiterations: int = 0
    cost_threshold: float = 1e-12
    seed: int = 0

    def __post_init__(self):
        if self.delta < 0:
            raise ValueError("delta must be >= 0")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("p must lie in [0, 1]")
        if self.max_subiterations < 0:
            raise ValueError("max_subiterations must be >= 0")


class VarProblem:
    """Reduced least-squares problem for fixed rows and right-hand side.

    Holds a one-slot cache keyed on the exact bytes of ``theta`` so that a
    Jacobian request after a residual request at the same point reuses
    ``H`` and ``beta_ls``.
    """

    def __init__(self, arch: Architecture, box: DomainBox, points, terms: RowTerms, rhs,
                 rank_cutoff: float | None = None):
        self.arch = arch
        self.box = box
        self.points = np.asarray(points, dtype=float)
        self.terms = terms
        self.rhs = np.asarray(rhs, dtype=float)
        if self.rhs.shape != (terms.n_rows,):
            raise ValueError("rhs length must equal the number of rows")
        self.rank_cutoff = rank_cutoff
        self.n_assemblies = 0
        self._key: bytes | None = None
        self._system: AssembledSystem | None = None

    @property
    def n_params(self) -> int:
        return self.arch.n_hidden_params

    def build_H(self, theta) -> np.ndarray:
        ev = hidden_eval(self.arch, theta, self.points, self.box, self.terms.order)
        return self.terms.apply(ev)

    def assemble(self, theta) -> AssembledSystem:
        theta = np.asarray(theta, dtype=float)
        key = theta.tobytes()
        if key == self._key:
            return self._system
        H = self.build_H(theta)
        solver = MinNormSolver(H, self.rank_cutoff)
        beta = solver.solve(self.rhs)
        self.n_assemblies += 1
        self._key = key
        self._system = AssembledSystem(H, self.rhs, beta, theta.copy(), solver)
        return self._system

    def residual(self, theta) -> np.ndarray:
        sys = self.assemble(theta)
        return sys.H @ sys.beta_ls - sys.S

    def jacobian(self, theta) -> np.ndarray:
        sys = self.assemble(theta)
        J0 = param_jacobian_rows(self.arch, sys.theta, sys.beta_ls, self.points, self.box, self.terms)
        K = sys.solver.solve(J0)
        J1 = matmul(sys.H, K)
        return J0 - J1

    def linear_solve(self, theta) -> np.ndarray:
        """Output weights for fixed hidden parameters (the ELM solution)."""
        return self.assemble(theta).beta_ls.copy()


@dataclass
class VarProResult:
    theta: np.ndarray
    beta: np.ndarray
    cost: float
    gn_iterations: int
    subiterations: int
    best_costs: list[float]
    terminations: list[str]


def _draw_magnitude(rng, delta, delta_pref, p):
    xi = rng.uniform()
    if delta_pref is not None and xi < p:
        return rng.uniform(0.0, min(1.1 * delta_pref, delta))
    return rng.uniform(0.0, delta)


def varpro_solve(problem: VarProblem, theta0, perturb: PerturbConfig | None = None,
                 nlsq_config: nlsq.NlsqConfig | None = None,
                 rng: np.random.Generator | None = None) -> VarProResult:
    """Minimize the reduced residual, restarting from perturbed copies of the
    best point while the cost stays above ``perturb.cost_threshold``."""
    perturb = perturb or PerturbConfig()
    nlsq_config = nlsq_config or nlsq.NlsqConfig()
    if rng is None:
        rng = np.random.default_rng(perturb.seed)
    theta0 = np.asarray(theta0, dtype=float)
    if theta0.shape != (problem.n_params,):
        raise ValueError(f"theta0 must have length {problem.n_params}")

    res = nlsq.minimize(problem.residual, problem.jacobian, theta0, nlsq_config)
    theta, cost = res.theta, res.cost
    gn_iters, subiters = res.iterations, 0
    best_costs, terminations = [cost], [res.termination]
    if cost > perturb.cost_threshold:
        delta_pref = None
        for _ in range(perturb.max_subiterations):
            subiters += 1
            delta1 = _draw_magnitude(rng, perturb.delta, delta_pref, perturb.p)
            start = theta + rng.uniform(-delta1, delta1, size=theta.shape)
            res = nlsq.minimize(problem.residual, problem.jacobian, start, nlsq_config)
            gn_iters += res.iterations
            terminations.append(res.termination)
            if res.cost < cost:
                theta, cost = res.theta, res.cost
                delta_pref = delta1
            best_costs.append(cost)
            log.debug("subiteration %d: delta1=%.3g cost=%.3e best=%.3e", subiters, delta1, res.cost, cost)
            if cost <= perturb.cost_threshold:
                break
    beta = problem.linear_solve(theta)
    return VarProResult(theta, beta, cost, gn_iters, subiters, best_costs, terminations)
