"""Dense minimum-norm least squares.

Every pseudo-inverse application in the solver goes through
:class:`MinNormSolver`, which factors a matrix once by SVD and then
solves any number of right-hand sides. The pseudo-inverse itself is never
formed.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DimensionError(ValueError):
    """Operand shapes are incompatible."""


class NonFiniteError(ValueError):
    """A NaN or Inf reached solver input."""


def default_rank_cutoff(shape: tuple[int, int]) -> float:
    return np.finfo(float).eps * max(shape)


def _as_matrix(A, name: str) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise DimensionError(f"{name} must be a non-empty 2-D array, got shape {A.shape}")
    return A


def _check_finite(A: np.ndarray, name: str) -> None:
    if not np.all(np.isfinite(A)):
        raise NonFiniteError(f"{name} contains non-finite entries")


@dataclass
class LsqSolution:
    solution: np.ndarray
    effective_rank: int
    residual_norm: float | np.ndarray


class MinNormSolver:
    """Thin-SVD factorization of ``A`` with singular values below
    ``rank_cutoff * sigma_max`` treated as zero."""

    def __init__(self, A, rank_cutoff: float | None = None):
        A = _as_matrix(A, "A")
        _check_finite(A, "A")
        if rank_cutoff is None:
            rank_cutoff = default_rank_cutoff(A.shape)
        if rank_cutoff < 0:
            raise ValueError("rank_cutoff must be non-negative")
        self.shape = A.shape
        self.rank_cutoff = rank_cutoff
        try:
            U, s, Vt = np.linalg.svd(A, full_matrices=False)
        except np.linalg.LinAlgError:
            # gesdd occasionally fails to converge; gesvd is slower but robust
            import scipy.linalg

            U, s, Vt = scipy.linalg.svd(A, full_matrices=False, lapack_driver="gesvd")
        smax = s[0] if s.size else 0.0
        rank = int(np.count_nonzero(s > rank_cutoff * smax)) if smax > 0 else 0
        self.singular_values = s
        self.rank = rank
        self._U = U[:, :rank]
        self._s = s[:rank]
        self._Vt = Vt[:rank]

    @property
    def range_basis(self) -> np.ndarray:
        """Orthonormal basis of the numerical column space."""
        return self._U

    def solve(self, B) -> np.ndarray:
        B = np.asarray(B, dtype=float)
        if B.shape[0] != self.shape[0]:
            raise DimensionError(
                f"right-hand side has {B.shape[0]} rows, matrix has {self.shape[0]}"
            )
        coef = self._U.T @ B
        if B.ndim == 1:
            return self._Vt.T @ (coef / self._s)
        return self._Vt.T @ (coef / self._s[:, None])


def lstsq_min_norm(A, B, rank_cutoff: float | None = None) -> LsqSolution:
    """Minimum-norm least-squares solution of ``A X = B``.

    ``B`` may be a vector or a matrix of right-hand sides; all columns share
    one factorization.
    """
    A = _as_matrix(A, "A")
    B = np.asarray(B, dtype=float)
    if B.ndim not in (1, 2) or B.shape[0] != A.shape[0]:
        raise DimensionError(f"B shape {B.shape} does not match A shape {A.shape}")
    _check_finite(B, "B")
    solver = MinNormSolver(A, rank_cutoff)
    X = solver.solve(B)
    resid = A @ X - B
    norm = float(np.linalg.norm(resid)) if B.ndim == 1 else np.linalg.norm(resid, axis=0)
    return LsqSolution(X, solver.rank, norm)


def matmul(A, B) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.ndim != 2 or B.ndim not in (1, 2) or A.shape[1] != B.shape[0]:
        raise DimensionError(f"cannot multiply shapes {A.shape} and {B.shape}")
    return A @ B
