"""Trust-region Gauss-Newton for unconstrained ``min 1/2 ||r(theta)||^2``.

Each iteration factors the Jacobian once by SVD and solves the
trust-region subproblem exactly in the Levenberg-Marquardt form
``(J^T J + lam I) p = -J^T r``, picking ``lam`` so that ``||p||`` lands on
the radius when the Gauss-Newton step does not fit. Termination tests
follow the usual ftol/xtol/gtol conventions of dense least-squares codes;
gtol bounds the cosine between the residual and each Jacobian column.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .linalg import NonFiniteError

log = logging.getLogger(__name__)

TERMINATIONS = ("gtol", "ftol", "xtol", "max_iter")


@dataclass
class NlsqConfig:
    max_iterations: int = 1000
    ftol: float = 1e-8
    xtol: float = 1e-8
    gtol: float = 1e-8
    initial_trust_radius: float | None = None

    def __post_init__(self):
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be >= 0")
        for name in ("ftol", "xtol", "gtol"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {v}")
        if self.initial_trust_radius is not None and self.initial_trust_radius <= 0:
            raise ValueError("initial_trust_radius must be positive")


@dataclass
class NlsqResult:
    theta: np.ndarray
    cost: float
    iterations: int
    termination: str
    cost_history: list[float] = field(default_factory=list)
    n_residual_evals: int = 0
    n_jacobian_evals: int = 0


def _subproblem(s, Vt, uf, radius):
    """Step from a thin SVD of J (singular values ``s``, ``uf = U^T r``)."""
    p = -(Vt.T @ (uf / s))
    pn = np.linalg.norm(p)
    if pn <= radius:
        return p
    s2 = s * s
    num = s * uf
    g_norm = np.linalg.norm(num)
    lo, hi = 0.0, g_norm / radius
    lam = 0.0
    for _ in range(60):
        q = num / (s2 + lam)
        qn = np.linalg.norm(q)
        if abs(qn - radius) <= 1e-10 * radius:
            break
        if qn > radius:
            lo = lam
        else:
            hi = lam
        # Newton on 1/||p(lam)|| - 1/radius, safeguarded by the bracket
        dq = -np.dot(q, q / (s2 + lam)) / qn
        lam_new = lam - (qn - radius) / dq * (qn / radius)
        if not lo < lam_new < hi:
            lam_new = 0.5 * (lo + hi)
        lam = lam_new
    p = -(Vt.T @ (num / (s2 + lam)))
    return p * (radius / np.linalg.norm(p))


def scaled_gradient_norm(J, r) -> float:
    """Largest cosine between ``r`` and a column of ``J`` (gtol measure).

    Zero columns and a zero residual contribute 0.
    """
    g = J.T @ r
    rn = np.linalg.norm(r)
    if rn == 0.0:
        return 0.0
    cn = np.linalg.norm(J, axis=0)
    nz = cn > 0
    if not np.any(nz):
        return 0.0
    return float(np.max(np.abs(g[nz]) / (cn[nz] * rn)))


def _thin_svd(J, rank_cutoff=None):
    U, s, Vt = np.linalg.svd(J, full_matrices=False)
    cutoff = (rank_cutoff if rank_cutoff is not None else np.finfo(float).eps * max(J.shape)) * (
        s[0] if s.size else 0.0
    )
    keep = s > cutoff
    return U[:, keep], s[keep], Vt[keep]


def trust_region_step(J, r, radius) -> np.ndarray:
    """Approximate minimizer of ``||J s + r||`` subject to ``||s|| <= radius``."""
    J = np.asarray(J, dtype=float)
    r = np.asarray(r, dtype=float)
    U, s, Vt = _thin_svd(J)
    if s.size == 0:
        return np.zeros(J.shape[1])
    return _subproblem(s, Vt, U.T @ r, radius)


def minimize(residual_fn, jacobian_fn, theta0, config: NlsqConfig | None = None) -> NlsqResult:
    config = config or NlsqConfig()
    x = np.array(theta0, dtype=float)
    r = np.asarray(residual_fn(x), dtype=float)
    nfev, njev = 1, 0
    if not np.all(np.isfinite(r)):
        raise NonFiniteError("residual is not finite at the initial point")
    cost = 0.5 * float(r @ r)
    history = [cost]
    if config.max_iterations == 0:
        return NlsqResult(x, cost, 0, "max_iter", history, nfev, njev)

    J = np.asarray(jacobian_fn(x), dtype=float)
    njev += 1
    g = J.T @ r
    radius = config.initial_trust_radius or (np.linalg.norm(x) or 1.0)
    iterations = 0
    termination = None
    while termination is None:
        if scaled_gradient_norm(J, r) <= config.gtol:
            termination = "gtol"
            break
        if iterations >= config.max_iterations:
            termination = "max_iter"
            break
        U, s, Vt = _thin_svd(J)
        uf = U.T @ r
        x_norm = np.linalg.norm(x)
        actual = -1.0
        while actual <= 0.0:
            p = _subproblem(s, Vt, uf, radius)
            Jp = J @ p
            predicted = -(g @ p + 0.5 * (Jp @ Jp))
            p_norm = np.linalg.norm(p)
            r_new = np.asarray(residual_fn(x + p), dtype=float)
            nfev += 1
            if not np.all(np.isfinite(r_new)):
                radius = 0.25 * p_norm
                if radius < np.finfo(float).tiny:
                    raise NonFiniteError("trust radius underflow after non-finite residuals")
                continue
            cost_new = 0.5 * float(r_new @ r_new)
            actual = cost - cost_new
            ratio = actual / predicted if predicted > 0 else 0.0
            if ratio < 0.25:
                radius = 0.25 * p_norm
            elif ratio > 0.75 and p_norm >= 0.95 * radius:
                radius = 2.0 * radius
            if actual < config.ftol * cost and ratio > 0.25:
                termination = "ftol"
            elif p_norm < config.xtol * (config.xtol + x_norm):
                termination = "xtol"
            if termination is not None:
                break
        if actual > 0.0:
            x = x + p
            r = r_new
            cost = cost_new
            history.append(cost)
            iterations += 1
            if termination is None:
                J = np.asarray(jacobian_fn(x), dtype=float)
                njev += 1
                g = J.T @ r
    log.debug("nlsq: %s after %d iterations, cost %.3e", termination, iterations, cost)
    return NlsqResult(x, cost, iterations, termination, history, nfev, njev)
