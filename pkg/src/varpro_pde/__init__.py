"""Neural-network PDE solvers trained by variable projection.

Hidden-layer coefficients are optimized by trust-region Gauss-Newton on
the reduced residual; output weights come from a minimum-norm linear
least-squares solve. Nonlinear problems are wrapped in a Newton loop.
"""
from .linalg import DimensionError, NonFiniteError, lstsq_min_norm, matmul
from .network import (
    HAVE_COMPILED,
    Architecture,
    DomainBox,
    backend_name,
    hidden_eval,
    network_output,
)
from .newton import NewtonConfig, NewtonResult, newton_varpro_solve
from .nlsq import NlsqConfig, NlsqResult, minimize
from .runner import RunConfig, SolveReport, run
from .varpro import PerturbConfig, VarProblem, VarProResult, varpro_solve

__version__ = "0.1.0"

__all__ = [
    "DimensionError", "NonFiniteError", "lstsq_min_norm", "matmul",
    "HAVE_COMPILED", "Architecture", "DomainBox", "backend_name", "hidden_eval", "network_output",
    "NewtonConfig", "NewtonResult", "newton_varpro_solve",
    "NlsqConfig", "NlsqResult", "minimize",
    "RunConfig", "SolveReport", "run",
    "PerturbConfig", "VarProblem", "VarProResult", "varpro_solve",
]
