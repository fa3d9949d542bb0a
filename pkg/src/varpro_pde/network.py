"""Feed-forward network ``u(x) = Phi(theta, x) @ beta`` with a linear,
bias-free output layer.

Hidden parameters ``theta`` are packed layer by layer: the weight matrix
``W`` (shape ``M_i x M_{i-1}``) in row-major order, then the bias vector.
Coordinates are mapped from the domain box to ``[-1, 1]^d`` before the
first layer, and derivatives are reported with respect to the physical
coordinates.

Single-hidden-layer evaluations use the compiled kernel in ``_kernels``
when it is importable; everything else (and everything when
``VARPRO_PDE_PURE_PYTHON`` is set) runs through the numpy code in
``_jets``.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse

from . import _jets
from .activations import ACTIVATION_CODES, check_activation

try:
    if os.environ.get("VARPRO_PDE_PURE_PYTHON"):
        raise ImportError("pure-Python backend forced")
    from . import _kernels
except ImportError:  # pragma: no cover - depends on the build
    _kernels = None

HAVE_COMPILED = _kernels is not None
_use_compiled = HAVE_COMPILED


def backend_name() -> str:
    return "cython" if _use_compiled else "numpy"


def set_backend(name: str) -> str:
    """Switch between ``"cython"`` and ``"numpy"``; returns the previous name."""
    global _use_compiled
    if name not in ("cython", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "cython" and not HAVE_COMPILED:
        raise RuntimeError("compiled kernels are not available in this build")
    previous = backend_name()
    _use_compiled = name == "cython"
    return previous


@dataclass(frozen=True)
class Architecture:
    layer_widths: tuple[int, ...]
    activation: str

    def __post_init__(self):
        widths = tuple(int(w) for w in self.layer_widths)
        object.__setattr__(self, "layer_widths", widths)
        if len(widths) < 3:
            raise ValueError("need an input layer, at least one hidden layer and an output layer")
        if widths[-1] != 1:
            raise ValueError("output layer must have width 1")
        if min(widths) < 1:
            raise ValueError("all layer widths must be >= 1")
        check_activation(self.activation)

    @property
    def input_dim(self) -> int:
        return self.layer_widths[0]

    @property
    def width(self) -> int:
        """Number of nodes in the last hidden layer (the length of beta)."""
        return self.layer_widths[-2]

    @property
    def n_hidden_params(self) -> int:
        w = self.layer_widths
        return sum(w[i] * (w[i - 1] + 1) for i in range(1, len(w) - 1))

    def unpack(self, theta) -> list[tuple[np.ndarray, np.ndarray]]:
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.n_hidden_params,):
            raise ValueError(
                f"theta must have length {self.n_hidden_params}, got shape {theta.shape}"
            )
        layers, pos = [], 0
        w = self.layer_widths
        for i in range(1, len(w) - 1):
            n_out, n_in = w[i], w[i - 1]
            W = theta[pos : pos + n_out * n_in].reshape(n_out, n_in)
            pos += n_out * n_in
            layers.append((np.ascontiguousarray(W), theta[pos : pos + n_out].copy()))
            pos += n_out
        return layers

    @staticmethod
    def pack(layers) -> np.ndarray:
        return np.concatenate([np.concatenate([W.ravel(), b]) for W, b in layers])

    def random_theta(self, rng: np.random.Generator, R_m: float) -> np.ndarray:
        """Uniform draw on ``[-R_m, R_m]`` in packing order."""
        return rng.uniform(-R_m, R_m, size=self.n_hidden_params)


@dataclass(frozen=True)
class DomainBox:
    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lower)
        hi = tuple(float(v) for v in self.upper)
        if len(lo) != len(hi):
            raise ValueError("lower and upper must have equal length")
        if any(b <= a for a, b in zip(lo, hi)):
            raise ValueError("every interval needs upper > lower")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return len(self.lower)

    @cached_property
    def scale(self) -> np.ndarray:
        return 2.0 / (np.array(self.upper) - np.array(self.lower))

    def normalize(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        return (points - np.array(self.lower)) * self.scale - 1.0

    def contains(self, points, tol: float = 1e-12) -> bool:
        points = np.asarray(points, dtype=float)
        return bool(
            np.all(points >= np.array(self.lower) - tol) and np.all(points <= np.array(self.upper) + tol)
        )


def derivative_components(d: int, order: int = 2) -> list[tuple[int, ...]]:
    """Multi-indices in jet order: ``()``, ``(k,)``, ``(k, l)`` with ``k <= l``."""
    comps: list[tuple[int, ...]] = [()]
    if order >= 1:
        comps += [(k,) for k in range(d)]
    if order >= 2:
        comps += _jets.pairs(d)
    return comps


def component_index(d: int, *axes: int) -> int:
    """Position of the derivative over ``axes`` in the jet layout."""
    axes = tuple(sorted(axes))
    if len(axes) > 2:
        raise ValueError("derivatives above second order are not supported")
    if any(a < 0 or a >= d for a in axes):
        raise ValueError(f"axis out of range for dimension {d}: {axes}")
    return derivative_components(d, len(axes)).index(axes)


@dataclass
class HiddenEval:
    """Last-hidden-layer outputs and their coordinate derivatives.

    ``blocks[c]`` is the ``N x M`` matrix for component ``components[c]``.
    """

    components: list[tuple[int, ...]]
    blocks: np.ndarray

    @property
    def Psi(self) -> np.ndarray:
        return self.blocks[0]

    def block(self, *axes: int) -> np.ndarray:
        return self.blocks[self.components.index(tuple(sorted(axes)))]


def _check_order(order: int) -> None:
    if order not in (0, 1, 2):
        raise ValueError(f"derivative order must be 0, 1 or 2, got {order}")


def _eval_jets(arch, layers, xn, scale, order):
    if _use_compiled and len(layers) == 1:
        W, b = layers[0]
        return _kernels.jets_single(
            W, b, np.ascontiguousarray(xn), scale, ACTIVATION_CODES[arch.activation], order
        )
    return _jets.jets(layers, arch.activation, xn, scale, order)


def _term_gradients(arch, layers, xn, scale, order, beta, coef):
    if _use_compiled and len(layers) == 1:
        W, b = layers[0]
        return _kernels.term_gradients_single(
            W, b, np.ascontiguousarray(xn), scale, ACTIVATION_CODES[arch.activation], order,
            np.ascontiguousarray(beta, dtype=float), np.ascontiguousarray(coef),
        )
    return _jets.term_gradients(layers, arch.activation, xn, scale, order, beta, coef)


def hidden_eval(arch: Architecture, theta, points, box: DomainBox, order: int = 0) -> HiddenEval:
    _check_order(order)
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[1] != arch.input_dim or box.dim != arch.input_dim:
        raise ValueError("points, box and architecture disagree on the input dimension")
    if not box.contains(points):
        raise ValueError("collocation points lie outside the domain box")
    layers = arch.unpack(theta)
    blocks = _eval_jets(arch, layers, box.normalize(points), box.scale, order)
    return HiddenEval(derivative_components(arch.input_dim, order), blocks)


def network_output(arch: Architecture, theta, beta, points, box: DomainBox) -> np.ndarray:
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (arch.width,):
        raise ValueError(f"beta must have length {arch.width}, got shape {beta.shape}")
    return hidden_eval(arch, theta, points, box, 0).Psi @ beta


class RowTerms:
    """Linear functionals of the network output, one per residual row.

    Each row is a sum of terms; term ``t`` evaluates the jet components at
    point ``point[t]`` weighted by ``coef[t]`` (full order-2 layout). A
    periodic pair, for example, is two terms with opposite signs sharing a
    row.
    """

    def __init__(self, row, point, coef, n_rows: int | None = None):
        self.row = np.asarray(row, dtype=np.intp)
        self.point = np.asarray(point, dtype=np.intp)
        self.coef = np.ascontiguousarray(coef, dtype=float)
        if self.coef.ndim != 2 or not (len(self.row) == len(self.point) == len(self.coef)):
            raise ValueError("row, point and coef must describe the same number of terms")
        if self.coef.shape[1] not in (3, 6, 10):
            raise ValueError(
                "coef needs one column per derivative component up to order 2 "
                "(higher-order PDE operators are not supported)"
            )
        self.n_rows = int(n_rows if n_rows is not None else self.row.max() + 1)

    @cached_property
    def order(self) -> int:
        """Highest derivative order carrying a nonzero coefficient."""
        d = self.input_dim
        nz = np.any(self.coef != 0.0, axis=0)
        if np.any(nz[1 + d :]):
            return 2
        if np.any(nz[1 : 1 + d]):
            return 1
        return 0

    @cached_property
    def input_dim(self) -> int:
        C = self.coef.shape[1]
        for d in (1, 2, 3):
            if C == _jets.n_components(d, 2):
                return d
        raise ValueError(f"cannot infer input dimension from {C} coefficient columns")

    @cached_property
    def aggregator(self) -> scipy.sparse.csr_matrix:
        T = len(self.row)
        return scipy.sparse.csr_matrix(
            (np.ones(T), (self.row, np.arange(T))), shape=(self.n_rows, T)
        )

    def reduced_coef(self) -> np.ndarray:
        return self.coef[:, : _jets.n_components(self.input_dim, self.order)]

    def apply(self, ev: HiddenEval) -> np.ndarray:
        """Rows of ``H`` built from a ``HiddenEval`` at the point set."""
        C = _jets.n_components(self.input_dim, self.order)
        if ev.blocks.shape[0] < C:
            raise ValueError("HiddenEval was computed at too low a derivative order")
        per_term = np.einsum("tc,ctm->tm", self.reduced_coef(), ev.blocks[:C, self.point, :])
        return np.asarray(self.aggregator @ per_term)


def param_jacobian_rows(arch: Architecture, theta, beta_frozen, points, box: DomainBox,
                        terms: RowTerms) -> np.ndarray:
    """``d(rows of H(theta) @ beta_frozen) / d theta`` with beta held fixed."""
    beta_frozen = np.asarray(beta_frozen, dtype=float)
    if beta_frozen.shape != (arch.width,):
        raise ValueError(f"beta must have length {arch.width}")
    if terms.input_dim != arch.input_dim:
        raise ValueError("row terms and architecture disagree on the input dimension")
    layers = arch.unpack(theta)
    xn = box.normalize(np.asarray(points, dtype=float)[terms.point])
    G = _term_gradients(arch, layers, xn, box.scale, terms.order, beta_frozen, terms.reduced_coef())
    return np.asarray(terms.aggregator @ G)
