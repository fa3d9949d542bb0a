"""Pure-numpy jet propagation for networks of any depth.

A "jet" is the value of a layer's output together with its first and
second derivatives with respect to the physical coordinates. Jets are
pushed forward layer by layer (forward mode in x); parameter derivatives
of a weighted combination of the last-layer jet components are then
obtained by a hand-written reverse sweep over that forward computation.

Component layout for input dimension ``d``: index 0 is the value, indices
``1..d`` the first derivatives, then one entry per pair ``(k, l)`` with
``k <= l`` in lexicographic order.
"""
from __future__ import annotations

import numpy as np

from .activations import derivatives


def pairs(d: int) -> list[tuple[int, int]]:
    return [(k, l) for k in range(d) for l in range(k, d)]


def n_components(d: int, order: int) -> int:
    return 1 + (d if order >= 1 else 0) + (d * (d + 1) // 2 if order >= 2 else 0)


def _input_jet(xn, scale, order):
    N, d = xn.shape
    a1 = a2 = None
    if order >= 1:
        a1 = np.zeros((d, N, d))
        for k in range(d):
            a1[k, :, k] = scale[k]
    if order >= 2:
        a2 = np.zeros((len(pairs(d)), N, d))
    return xn, a1, a2


def _forward(layers, kind, xn, scale, order, n_sigma):
    d = xn.shape[1]
    prs = pairs(d)
    a0, a1, a2 = _input_jet(xn, scale, order)
    tape = []
    for W, b in layers:
        z0 = a0 @ W.T + b
        z1 = a1 @ W.T if order >= 1 else None
        z2 = a2 @ W.T if order >= 2 else None
        s = derivatives(kind, z0, n_sigma)
        tape.append((a0, a1, a2, z1, z2, s))
        a0 = s[0]
        if order >= 1:
            o1 = s[1] * z1
        if order >= 2:
            o2 = np.empty_like(z2)
            for p, (k, l) in enumerate(prs):
                o2[p] = s[2] * z1[k] * z1[l] + s[1] * z2[p]
            a2 = o2
        if order >= 1:
            a1 = o1
    return (a0, a1, a2), tape


def jets(layers, kind, xn, scale, order):
    """Last-hidden-layer jets stacked as ``(C, N, M)``."""
    (a0, a1, a2), _ = _forward(layers, kind, xn, scale, order, order)
    blocks = [a0[None]]
    if order >= 1:
        blocks.append(a1)
    if order >= 2:
        blocks.append(a2)
    return np.concatenate(blocks, axis=0)


def term_gradients(layers, kind, xn, scale, order, beta, coef):
    """Per-term gradient of ``sum_c coef[t, c] * (D_c u)(x_t)`` w.r.t. theta.

    ``xn`` holds the (normalized) point of each term, ``coef`` is ``(T, C)``
    and ``beta`` the frozen output weights. Returns ``(T, N_h)``.
    """
    d = xn.shape[1]
    prs = pairs(d)
    _, tape = _forward(layers, kind, xn, scale, order, order + 1)
    # seeds: adjoint of every jet component of the last hidden layer
    g0 = coef[:, 0, None] * beta
    g1 = coef[:, 1 : 1 + d].T[:, :, None] * beta if order >= 1 else None
    g2 = coef[:, 1 + d :].T[:, :, None] * beta if order >= 2 else None

    grads = []
    for (W, b), (a0, a1, a2, z1, z2, s) in zip(reversed(layers), reversed(tape)):
        zb0 = s[1] * g0
        if order >= 1:
            zb0 = zb0 + s[2] * np.einsum("ktm,ktm->tm", z1, g1)
            zb1 = s[1] * g1
        if order >= 2:
            for p, (k, l) in enumerate(prs):
                zb0 += (s[3] * z1[k] * z1[l] + s[2] * z2[p]) * g2[p]
                zb1[k] += s[2] * z1[l] * g2[p]
                zb1[l] += s[2] * z1[k] * g2[p]
            zb2 = s[1] * g2
        Wbar = np.einsum("tm,ti->tmi", zb0, a0)
        if order >= 1:
            Wbar += np.einsum("ktm,kti->tmi", zb1, a1)
        if order >= 2:
            Wbar += np.einsum("ptm,pti->tmi", zb2, a2)
        T = zb0.shape[0]
        grads.append(np.concatenate([Wbar.reshape(T, -1), zb0], axis=1))
        g0 = zb0 @ W
        if order >= 1:
            g1 = zb1 @ W
        if order >= 2:
            g2 = zb2 @ W
    return np.concatenate(grads[::-1], axis=1)
