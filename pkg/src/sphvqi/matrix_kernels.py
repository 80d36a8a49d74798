"""Divergence-free and curl-free matrix-valued kernels.

Closed forms use the scaled tensors, never the raw ``kappa'`` factor::

    Psi_div(x, y)  = c_Q(t) Q~ + kappa(t) R
    Psi_curl(x, y) = c_Q(t) V~ + kappa(t) W

The truncated vector-harmonic expansions are kept here as independent
oracles (``*_series``); production code never calls them.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sphere_core import EPS_POLE, vec_harm_degrees, vec_sph_harms_all
from .zonal_kernels import FourierCoeffs, ZonalKernel, cq_eval, kappa_eval

__all__ = [
    "MatrixKernelEval",
    "eval_div",
    "eval_curl",
    "eval_combined",
    "kernel_matrices",
    "eval_div_series",
    "eval_curl_series",
    "series_matrices",
    "series_matrices_pairs",
]


@dataclass(frozen=True)
class MatrixKernelEval:
    div: np.ndarray
    curl: np.ndarray

    @property
    def combined(self) -> np.ndarray:
        return self.div + self.curl


def _pair_geometry(x: np.ndarray, Y: np.ndarray):
    """Per-node geometry used by both kernels; ``Y`` has shape (N, 3)."""
    t = np.clip(Y @ x, -1.0, 1.0)
    c = np.cross(x[None, :], Y)
    s = np.einsum("ij,ij->i", c, c)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = np.where(s < EPS_POLE, 0.0, 1.0 / s)
    return t, c, s, inv


def kernel_matrices(kernel, x, Y) -> tuple[np.ndarray, np.ndarray]:
    """Stacks ``Psi_div(x, Y[j])`` and ``Psi_curl(x, Y[j])`` of shape (N, 3, 3).

    ``kernel`` is a :class:`ZonalKernel` (closed form) or a
    :class:`FourierCoeffs` (truncated series).
    """
    x = np.asarray(x, dtype=float)
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if isinstance(kernel, FourierCoeffs):
        return series_matrices(kernel, x, Y)
    t, c, s, inv = _pair_geometry(x, Y)
    kap = kappa_eval(kernel, t)
    cq = cq_eval(kernel, t)
    eye = np.eye(3)
    Qs = -np.einsum("ni,nj->nij", c, c) * inv[:, None, None]
    R = t[:, None, None] * eye - np.einsum("nj,i->nji", Y, x)
    a = Y - t[:, None] * x
    b = x - t[:, None] * Y
    Vs = np.einsum("ni,nj->nij", a, b) * inv[:, None, None]
    Px = eye - np.outer(x, x)
    Py = eye[None] - np.einsum("ni,nj->nij", Y, Y)
    W = np.einsum("ij,njk->nik", Px, Py)
    div = cq[:, None, None] * Qs + kap[:, None, None] * R
    curl = cq[:, None, None] * Vs + kap[:, None, None] * W
    return div, curl


def eval_div(kernel: ZonalKernel, x, y) -> np.ndarray:
    """``Psi_div(x, y)`` as a 3x3 array."""
    return kernel_matrices(kernel, x, np.asarray(y, dtype=float)[None])[0][0]


def eval_curl(kernel: ZonalKernel, x, y) -> np.ndarray:
    """``Psi_curl(x, y)`` as a 3x3 array."""
    return kernel_matrices(kernel, x, np.asarray(y, dtype=float)[None])[1][0]


def eval_combined(kernel: ZonalKernel, x, y) -> MatrixKernelEval:
    div, curl = kernel_matrices(kernel, x, np.asarray(y, dtype=float)[None])
    return MatrixKernelEval(div=div[0], curl=curl[0])


# --- truncated series -------------------------------------------------------

def _degree_weights(coeffs: FourierCoeffs) -> np.ndarray:
    L = coeffs.L
    w = np.empty((L + 1) ** 2)
    for ell in range(L + 1):
        w[ell * ell:(ell + 1) ** 2] = coeffs.values[ell] if ell >= 1 else 0.0
    return w


def series_matrices(coeffs: FourierCoeffs, x, Y) -> tuple[np.ndarray, np.ndarray]:
    """Truncated expansions ``sum_{1<=l<=L} psi_hat(l) sum_k y(x) y(Y_j)^T``.

    Returns the div and curl stacks of shape (N, 3, 3).
    """
    x = np.asarray(x, dtype=float)
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    L = coeffs.L
    if L < 1:
        z = np.zeros((len(Y), 3, 3))
        return z, z.copy()
    w = _degree_weights(coeffs)
    yx, zx = vec_sph_harms_all(L, x[None])
    yy, zy = vec_sph_harms_all(L, Y)
    div = np.einsum("h,hi,hnj->nij", w, yx[:, 0], yy)
    curl = np.einsum("h,hi,hnj->nij", w, zx[:, 0], zy)
    return div, curl


def _cross_matrix(v: np.ndarray) -> np.ndarray:
    # stacked [v]_x with [v]_x u = v cross u
    out = np.zeros(v.shape[:-1] + (3, 3))
    out[..., 0, 1], out[..., 0, 2] = -v[..., 2], v[..., 1]
    out[..., 1, 0], out[..., 1, 2] = v[..., 2], -v[..., 0]
    out[..., 2, 0], out[..., 2, 1] = -v[..., 1], v[..., 0]
    return out


def series_matrices_pairs(coeffs: FourierCoeffs, X, Y, chunk: int = 256):
    """Series kernels for the pairs ``(X[p], Y[p])``; shape (P, 3, 3) each.

    Only the four scalar products of the local-basis coefficients are
    accumulated per degree, so memory stays O(L * chunk).  The div kernel
    follows from ``y = x cross z``: ``div = [x]_x curl [y]_x^T``.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    P = len(X)
    div = np.zeros((P, 3, 3))
    curl = np.zeros((P, 3, 3))
    if coeffs.L < 1:
        return div, curl
    vals = coeffs.values
    for lo in range(0, P, chunk):
        hi = min(P, lo + chunk)
        sums = np.zeros((4, hi - lo))
        gen_x = vec_harm_degrees(coeffs.L, X[lo:hi])
        gen_y = vec_harm_degrees(coeffs.L, Y[lo:hi])
        for (ell, ax, bx, ex_t, ex_p), (_, ay, by, ey_t, ey_p) in zip(gen_x, gen_y):
            w = vals[ell]
            sums[0] += w * np.einsum("kp,kp->p", ax, ay)
            sums[1] += w * np.einsum("kp,kp->p", ax, by)
            sums[2] += w * np.einsum("kp,kp->p", bx, ay)
            sums[3] += w * np.einsum("kp,kp->p", bx, by)
        c = (
            sums[0, :, None, None] * np.einsum("pi,pj->pij", ex_t, ey_t)
            + sums[1, :, None, None] * np.einsum("pi,pj->pij", ex_t, ey_p)
            + sums[2, :, None, None] * np.einsum("pi,pj->pij", ex_p, ey_t)
            + sums[3, :, None, None] * np.einsum("pi,pj->pij", ex_p, ey_p)
        )
        curl[lo:hi] = c
        Cx = _cross_matrix(X[lo:hi])
        Cy = _cross_matrix(Y[lo:hi])
        div[lo:hi] = Cx @ c @ np.swapaxes(Cy, -1, -2)
    return div, curl


def eval_div_series(coeffs: FourierCoeffs, x, y) -> np.ndarray:
    return series_matrices(coeffs, x, np.asarray(y, dtype=float)[None])[0][0]


def eval_curl_series(coeffs: FourierCoeffs, x, y) -> np.ndarray:
    return series_matrices(coeffs, x, np.asarray(y, dtype=float)[None])[1][0]
