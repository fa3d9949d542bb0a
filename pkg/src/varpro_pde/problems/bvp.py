"""Boundary/initial-value problem description and collocation rows.

Operators are dictionaries from derivative multi-indices to constant
coefficients, e.g. ``{(0, 0): 1.0, (1, 1): 1.0}`` is the 2-D Laplacian and
``{(1,): 1.0, (0,): 2.0}`` is ``u_t + 2 u_x`` when axis 1 is time.

Rows are laid out as: one PDE row per collocation point (boundary points
included), then the rows of each condition in declaration order.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..network import (
    Architecture,
    DomainBox,
    RowTerms,
    derivative_components,
    hidden_eval,
    network_output,
)

Operator = dict  # multi-index tuple -> float

ROLE_PDE, ROLE_BOUNDARY, ROLE_INITIAL, ROLE_PERIODIC = "pde", "boundary", "initial", "periodic"


def operator_vector(op: Operator, d: int) -> np.ndarray:
    comps = derivative_components(d, 2)
    vec = np.zeros(len(comps))
    for axes, c in op.items():
        key = tuple(sorted(axes))
        if len(key) > 2:
            raise ValueError(f"derivative {axes} exceeds second order")
        vec[comps.index(key)] += c
    return vec


def operator_order(op: Operator) -> int:
    return max((len(k) for k, c in op.items() if c != 0), default=0)


@dataclass(frozen=True)
class FaceCondition:
    """``op u = data`` on the grid points of one face ``x_axis = bound``."""

    axis: int
    side: str  # "lower" | "upper"
    operator: Operator
    data: Callable[[np.ndarray], np.ndarray]
    role: str = ROLE_BOUNDARY


@dataclass(frozen=True)
class PeriodicCondition:
    """``op u(lower face) - op u(upper face) = 0`` for matching points."""

    axis: int
    operator: Operator = field(default_factory=lambda: {(): 1.0})
    role: str = ROLE_PERIODIC


@dataclass(frozen=True)
class NonlinearTerms:
    """Nonlinear parts ``F(u)`` (PDE rows) and ``G(u)`` (boundary rows).

    ``F`` maps a field state (dict of derivative multi-index to values at
    the points) to values; ``dF`` maps the same state to the coefficients
    of the linearization ``F'(w) v = sum_c dF[c] * D_c v``. ``G``/``dG``
    act on rows of role ``boundary`` only and may be omitted.
    """

    F: Callable[[dict], np.ndarray]
    dF: Callable[[dict], Operator]
    G: Callable[[dict], np.ndarray] | None = None
    dG: Callable[[dict], Operator] | None = None


@dataclass(frozen=True)
class BvpSpec:
    name: str
    box: DomainBox
    operator: Operator
    source: Callable[[np.ndarray], np.ndarray]
    conditions: tuple
    exact: Callable[[np.ndarray], np.ndarray] | None = None
    nonlinear: NonlinearTerms | None = None
    time_axis: int | None = None

    @property
    def dim(self) -> int:
        return self.box.dim

    @property
    def pde_order(self) -> int:
        return operator_order(self.operator)

    def with_box(self, box: DomainBox) -> "BvpSpec":
        return dataclasses.replace(self, box=box)

    def with_conditions(self, conditions) -> "BvpSpec":
        return dataclasses.replace(self, conditions=tuple(conditions))


@dataclass
class CollocationSet:
    points: np.ndarray  # (N, d)
    terms: RowTerms
    rhs: np.ndarray  # (n_rows,)
    roles: np.ndarray  # role tag per row
    n_pde: int

    @property
    def n_points(self) -> int:
        return len(self.points)

    @property
    def n_rows(self) -> int:
        return len(self.rhs)

    def rows_with_role(self, role: str) -> np.ndarray:
        return np.flatnonzero(self.roles == role)


def uniform_grid(box: DomainBox, n: int) -> np.ndarray:
    """Tensor grid with ``n`` points per direction, endpoints included,
    the first axis varying slowest."""
    axes = [np.linspace(a, b, n) for a, b in zip(box.lower, box.upper)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def _face_mask(points, box, axis, side):
    bound = box.lower[axis] if side == "lower" else box.upper[axis]
    return np.isclose(points[:, axis], bound, rtol=0.0, atol=1e-12 * max(1.0, abs(bound)))


def build_collocation(problem: BvpSpec, Q1: int) -> CollocationSet:
    if Q1 < 2:
        raise ValueError("Q1 must be >= 2")
    box, d = problem.box, problem.dim
    points = uniform_grid(box, Q1)
    N = len(points)
    rows, pts, coefs, rhs, roles = [], [], [], [], []

    L = operator_vector(problem.operator, d)
    rows.append(np.arange(N))
    pts.append(np.arange(N))
    coefs.append(np.tile(L, (N, 1)))
    rhs.append(np.asarray(problem.source(points), dtype=float))
    roles += [ROLE_PDE] * N
    next_row = N

    for cond in problem.conditions:
        vec = operator_vector(cond.operator, d)
        if isinstance(cond, FaceCondition):
            idx = np.flatnonzero(_face_mask(points, box, cond.axis, cond.side))
            n = len(idx)
            rows.append(next_row + np.arange(n))
            pts.append(idx)
            coefs.append(np.tile(vec, (n, 1)))
            rhs.append(np.asarray(cond.data(points[idx]), dtype=float).reshape(n))
        elif isinstance(cond, PeriodicCondition):
            lo = np.flatnonzero(_face_mask(points, box, cond.axis, "lower"))
            hi = np.flatnonzero(_face_mask(points, box, cond.axis, "upper"))
            other = [k for k in range(d) if k != cond.axis]
            # pair by the remaining coordinates
            lo = lo[np.lexsort(points[lo][:, other].T[::-1])]
            hi = hi[np.lexsort(points[hi][:, other].T[::-1])]
            if not np.allclose(points[lo][:, other], points[hi][:, other]):
                raise ValueError("periodic faces do not pair up")
            n = len(lo)
            r = next_row + np.arange(n)
            rows += [r, r]
            pts += [lo, hi]
            coefs += [np.tile(vec, (n, 1)), np.tile(-vec, (n, 1))]
            rhs.append(np.zeros(n))
        else:
            raise TypeError(f"unsupported condition {cond!r}")
        roles += [cond.role] * n
        next_row += n

    terms = RowTerms(np.concatenate(rows), np.concatenate(pts), np.concatenate(coefs), next_row)
    return CollocationSet(points, terms, np.concatenate(rhs), np.array(roles), N)


def field_state(arch: Architecture, theta, beta, points, box: DomainBox, order: int = 2) -> dict:
    """Network output and its coordinate derivatives, keyed by multi-index."""
    ev = hidden_eval(arch, theta, points, box, order)
    vals = np.einsum("cnm,m->cn", ev.blocks, np.asarray(beta, dtype=float))
    return {comp: vals[i] for i, comp in enumerate(ev.components)}


def state_vector_product(coef_by_comp: Operator, state: dict) -> np.ndarray:
    """``sum_c coef[c] * state[c]`` with coefficients possibly arrays."""
    out = 0.0
    for comp, c in coef_by_comp.items():
        out = out + c * state[tuple(sorted(comp))]
    return out


@dataclass
class ErrorReport:
    max_error: float
    rms_error: float
    n_points: int = 0

    @classmethod
    def from_errors(cls, err) -> "ErrorReport":
        err = np.abs(np.asarray(err, dtype=float)).ravel()
        return cls(float(err.max()), float(np.sqrt(np.mean(err * err))), err.size)

    @classmethod
    def combine(cls, reports) -> "ErrorReport":
        n = sum(r.n_points for r in reports)
        ms = sum(r.rms_error ** 2 * r.n_points for r in reports) / n
        return cls(max(r.max_error for r in reports), float(np.sqrt(ms)), n)


def evaluate_errors(arch: Architecture, theta, beta, problem: BvpSpec, Q2: int = 101) -> ErrorReport:
    if problem.exact is None:
        raise ValueError(f"problem {problem.name!r} has no exact solution")
    grid = uniform_grid(problem.box, Q2)
    u = network_output(arch, theta, beta, grid, problem.box)
    return ErrorReport.from_errors(u - problem.exact(grid))

