"""Pure numpy implementation of the weighted matrix-kernel sums.

For eval points ``x`` and nodes ``y_j`` with vectors ``f_j`` and weights
``w_j`` this computes

    div(x)  = sum_j w_j Psi_div(x, y_j) f_j
    curl(x) = sum_j w_j Psi_curl(x, y_j) f_j

without forming the 3x3 blocks.  With ``c = x cross y`` and
``s = 1 - t^2``::

    Q~ f = -(x . (y cross f)) c / s
    R f  = t f - (x . f) y
    V~ f = (x . f - t y . f) (y - t x) / s
    W f  = g - (x . g) x,   g = f - (y . f) y
"""
from __future__ import annotations

import numpy as np

from .sphere_core import EPS_POLE
from .zonal_kernels import EPS_END, ZonalKernel, cq_eval, kappa_eval

#: pairs per block; bounds temporary memory to a few tens of MB
BLOCK_PAIRS = 1 << 20


def profiles(kernel: ZonalKernel, t: np.ndarray):
    """``(kappa(t), c_Q(t) / (1 - t^2))`` with the endpoint guards applied."""
    flat = t.ravel()
    kap = kappa_eval(kernel, flat)
    cq = cq_eval(kernel, flat)
    s = (1.0 - flat) * (1.0 + flat)
    ok = (s >= EPS_POLE) & (np.abs(s) >= EPS_END)
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled = np.where(ok, cq / np.where(ok, s, 1.0), 0.0)
    return kap.reshape(t.shape), scaled.reshape(t.shape)


def kernel_sum(kernel: ZonalKernel, X, nodes, values, weights):
    """Weighted div/curl kernel sums at eval points ``X``.

    Parameters
    ----------
    X : ndarray, shape (M, 3)
    nodes, values : ndarray, shape (N, 3)
    weights : ndarray, shape (N,)

    Returns
    -------
    div, curl : ndarray, shape (M, 3)
    count : int
        Number of kernel pairs evaluated (always ``M * N``).
    """
    X = np.ascontiguousarray(X, dtype=float)
    Yn = np.ascontiguousarray(nodes, dtype=float)
    F = np.ascontiguousarray(values, dtype=float)
    w = np.ascontiguousarray(weights, dtype=float)
    M, N = len(X), len(Yn)
    U = np.cross(Yn, F)
    fy = np.einsum("ij,ij->i", F, Yn)
    G = F - fy[:, None] * Yn
    div = np.empty((M, 3))
    curl = np.empty((M, 3))
    step = max(1, BLOCK_PAIRS // max(N, 1))
    for lo in range(0, M, step):
        Xc = X[lo:lo + step]
        T = np.clip(Xc @ Yn.T, -1.0, 1.0)
        kap, cqs = profiles(kernel, T)
        alpha = kap * w
        A = cqs * w
        XF = Xc @ F.T
        XU = Xc @ U.T
        XG = Xc @ G.T
        d = -np.cross(Xc, (A * XU) @ Yn)
        d += (alpha * T) @ F - (alpha * XF) @ Yn
        beta = A * (XF - T * fy)
        c = beta @ Yn - (beta * T).sum(axis=1)[:, None] * Xc
        c += alpha @ G - (alpha * XG).sum(axis=1)[:, None] * Xc
        div[lo:lo + step] = d
        curl[lo:lo + step] = c
    return div, curl, M * N


def kernel_sum_batch(kernel: ZonalKernel, X, nodes, values, weights):
    """:func:`kernel_sum` for a stack of fields ``values`` of shape (R, N, 3).

    Returns ``div, curl`` of shape (R, M, 3) and the pair count ``R * M * N``.
    """
    values = np.asarray(values, dtype=float)
    parts = [kernel_sum(kernel, X, nodes, F, weights) for F in values]
    div = np.stack([d for d, _, _ in parts]) if parts else np.empty((0, len(X), 3))
    curl = np.stack([c for _, c, _ in parts]) if parts else np.empty((0, len(X), 3))
    return div, curl, sum(n for _, _, n in parts)
