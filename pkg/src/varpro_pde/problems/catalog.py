"""The five benchmark problems with manufactured exact solutions.

All exact solutions but the advection one are products ``X(x) X(y)`` of
a single 1-D factor; sources are written out by hand from the factor's
first and second derivatives.
"""
from __future__ import annotations

import numpy as np

from ..network import DomainBox
from .bvp import (
    ROLE_INITIAL,
    BvpSpec,
    FaceCondition,
    NonlinearTerms,
    PeriodicCondition,
)

PI = np.pi


def _cos_terms(terms):
    """Factor ``sum A cos(k s + phi)`` -> function returning (v, v', v'')."""

    def factor(s):
        s = np.asarray(s, dtype=float)
        v = d1 = d2 = 0.0
        for A, k, phi in terms:
            arg = k * s + phi
            v = v + A * np.cos(arg)
            d1 = d1 - A * k * np.sin(arg)
            d2 = d2 - A * k * k * np.cos(arg)
        return v, d1, d2

    return factor


_poisson_cos = _cos_terms([(2.0, 1.5 * PI, 0.4 * PI), (1.5, 3.0 * PI, -0.2 * PI)])


def poisson_factor(s):
    v, d1, d2 = _poisson_cos(s)
    q = 1.0 + s * s
    return v + 1.0 / q, d1 - 2.0 * s / q**2, d2 + (6.0 * s * s - 2.0) / q**3


_helm_cos = _cos_terms([(2.5, 1.5 * PI, -0.4 * PI), (1.5, 3.0 * PI, 0.3 * PI)])


def helmholtz_factor(s):
    v, d1, d2 = _helm_cos(s)
    return v + np.sinh(s), d1 + np.cosh(s), d2 + np.sinh(s)


burgers_factor = _cos_terms([(2.0, PI, 0.4 * PI), (1.5, 2.0 * PI, -0.6 * PI)])
klein_gordon_factor = _cos_terms([(2.0, PI, 0.2 * PI), (1.8, 2.0 * PI, 0.35 * PI)])


def _product_exact(factor):
    def exact(p):
        return factor(p[:, 0])[0] * factor(p[:, 1])[0]

    return exact


def _dirichlet_box(exact):
    # u(x,0), u(x,1), u(0,y), u(1,y)
    return (
        FaceCondition(1, "lower", {(): 1.0}, exact),
        FaceCondition(1, "upper", {(): 1.0}, exact),
        FaceCondition(0, "lower", {(): 1.0}, exact),
        FaceCondition(0, "upper", {(): 1.0}, exact),
    )


def poisson2d() -> BvpSpec:
    exact = _product_exact(poisson_factor)

    def source(p):
        X, _, Xxx = poisson_factor(p[:, 0])
        Y, _, Yyy = poisson_factor(p[:, 1])
        return Xxx * Y + X * Yyy

    return BvpSpec(
        "poisson2d", DomainBox((0.0, 0.0), (1.0, 1.0)), {(0, 0): 1.0, (1, 1): 1.0},
        source, _dirichlet_box(exact), exact,
    )


ADVECTION_SPEED = -2.0


def advection_exact(p):
    return np.sin(2.0 * PI / 3.0 * (p[:, 0] - 2.0 * p[:, 1] - 2.0))


def advection1d(t_final: float = 10.0) -> BvpSpec:
    """``u_t - c u_x = 0`` on ``[0, 3] x [0, t_final]``, periodic in x."""
    return BvpSpec(
        "advection1d", DomainBox((0.0, 0.0), (3.0, t_final)),
        {(1,): 1.0, (0,): -ADVECTION_SPEED},
        lambda p: np.zeros(len(p)),
        (
            PeriodicCondition(0),
            FaceCondition(1, "lower", {(): 1.0}, advection_exact, ROLE_INITIAL),
        ),
        advection_exact, time_axis=1,
    )


def helmholtz_nl() -> BvpSpec:
    """``u_xx + u_yy - 100 u + 5 cos(2u) = f`` on the unit square."""
    exact = _product_exact(helmholtz_factor)

    def source(p):
        X, _, Xxx = helmholtz_factor(p[:, 0])
        Y, _, Yyy = helmholtz_factor(p[:, 1])
        u = X * Y
        return Xxx * Y + X * Yyy - 100.0 * u + 5.0 * np.cos(2.0 * u)

    nonlinear = NonlinearTerms(
        F=lambda s: 5.0 * np.cos(2.0 * s[()]),
        dF=lambda s: {(): -10.0 * np.sin(2.0 * s[()])},
    )
    return BvpSpec(
        "helmholtz_nl", DomainBox((0.0, 0.0), (1.0, 1.0)),
        {(0, 0): 1.0, (1, 1): 1.0, (): -100.0},
        source, _dirichlet_box(exact), exact, nonlinear,
    )


BURGERS_NU = 0.05


def burgers() -> BvpSpec:
    """``u_t + u u_x - nu u_xx = f`` on ``[0, 1] x [0, 1]``."""
    exact = _product_exact(burgers_factor)

    def source(p):
        X, Xx, Xxx = burgers_factor(p[:, 0])
        T, Tt, _ = burgers_factor(p[:, 1])
        return X * Tt + (X * T) * (Xx * T) - BURGERS_NU * Xxx * T

    nonlinear = NonlinearTerms(
        F=lambda s: s[()] * s[(0,)],
        dF=lambda s: {(): s[(0,)], (0,): s[()]},
    )
    return BvpSpec(
        "burgers", DomainBox((0.0, 0.0), (1.0, 1.0)),
        {(1,): 1.0, (0, 0): -BURGERS_NU},
        source,
        (
            FaceCondition(0, "lower", {(): 1.0}, exact),
            FaceCondition(0, "upper", {(): 1.0}, exact),
            FaceCondition(1, "lower", {(): 1.0}, exact, ROLE_INITIAL),
        ),
        exact, nonlinear, time_axis=1,
    )


def klein_gordon() -> BvpSpec:
    """``u_tt - u_xx + u + sin(u) = f`` on ``[0, 1] x [0, 2]``."""
    exact = _product_exact(klein_gordon_factor)

    def source(p):
        X, _, Xxx = klein_gordon_factor(p[:, 0])
        T, _, Ttt = klein_gordon_factor(p[:, 1])
        u = X * T
        return X * Ttt - Xxx * T + u + np.sin(u)

    def initial_rate(p):
        return klein_gordon_factor(p[:, 0])[0] * klein_gordon_factor(p[:, 1])[1]

    nonlinear = NonlinearTerms(
        F=lambda s: np.sin(s[()]),
        dF=lambda s: {(): np.cos(s[()])},
    )
    return BvpSpec(
        "klein_gordon", DomainBox((0.0, 0.0), (1.0, 2.0)),
        {(1, 1): 1.0, (0, 0): -1.0, (): 1.0},
        source,
        (
            FaceCondition(0, "lower", {(): 1.0}, exact),
            FaceCondition(0, "upper", {(): 1.0}, exact),
            FaceCondition(1, "lower", {(): 1.0}, exact, ROLE_INITIAL),
            FaceCondition(1, "lower", {(1,): 1.0}, initial_rate, ROLE_INITIAL),
        ),
        exact, nonlinear, time_axis=1,
    )


_CATALOG = {
    "poisson2d": poisson2d,
    "advection1d": advection1d,
    "helmholtz_nl": helmholtz_nl,
    "burgers": burgers,
    "klein_gordon": klein_gordon,
}


def problem_names() -> tuple[str, ...]:
    return tuple(_CATALOG)


def catalog() -> dict[str, BvpSpec]:
    return {name: make() for name, make in _CATALOG.items()}


def get_problem(name: str, **kwargs) -> BvpSpec:
    if name not in _CATALOG:
        raise KeyError(f"unknown problem {name!r}; available: {', '.join(_CATALOG)}")
    return _CATALOG[name](**kwargs)
