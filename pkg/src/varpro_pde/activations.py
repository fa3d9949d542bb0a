"""Activation functions with analytic derivatives up to third order.

The third derivative is only needed internally, for the parameter
Jacobian of second-order spatial derivatives.
"""
from __future__ import annotations

import numpy as np
from scipy.special import ndtr

ACTIVATIONS = ("cos", "sin", "gaussian", "gelu")
ACTIVATION_CODES = {name: i for i, name in enumerate(ACTIVATIONS)}

_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


def check_activation(kind: str) -> str:
    if kind not in ACTIVATION_CODES:
        raise ValueError(f"unknown activation {kind!r}; expected one of {ACTIVATIONS}")
    return kind


def derivatives(kind: str, x, order: int = 3) -> list[np.ndarray]:
    """Return ``[sigma, sigma', ..., sigma^(order)]`` evaluated at ``x``."""
    x = np.asarray(x, dtype=float)
    if kind == "cos":
        c, s = np.cos(x), np.sin(x)
        out = [c, -s, -c, s]
    elif kind == "sin":
        c, s = np.cos(x), np.sin(x)
        out = [s, c, -s, -c]
    elif kind == "gaussian":
        e = np.exp(-x * x)
        x2 = x * x
        out = [e, -2.0 * x * e, (4.0 * x2 - 2.0) * e, (12.0 * x - 8.0 * x2 * x) * e]
    elif kind == "gelu":
        pdf = _INV_SQRT_2PI * np.exp(-0.5 * x * x)
        cdf = ndtr(x)
        x2 = x * x
        out = [x * cdf, cdf + x * pdf, (2.0 - x2) * pdf, (x2 - 4.0) * x * pdf]
    else:
        check_activation(kind)
    return out[: order + 1]


def activation_eval(kind: str, x):
    """Value, first and second derivative of the activation at ``x``."""
    s0, s1, s2 = derivatives(check_activation(kind), x, order=2)
    return s0, s1, s2
