"""Matrix-valued SBF interpolation, the dense-solve comparison method.

The interpolant is ``s(x) = sum_j Psi(x, x_j) (c_j1 e_1(x_j) + c_j2 e_2(x_j))``
with ``Psi = Psi_div + Psi_curl`` and a tangent frame ``(e_1, e_2)`` at every
node.  The 2N x 2N system has entries ``e_a(x_i)^T Psi(x_i, x_j) e_b(x_j)``;
for tangent ``a`` at ``x`` and ``b`` at ``y`` these reduce to

    c_Q/s [-(a.c)(c.b) + (a.y)(x.b)] + kappa [(1 + t) a.b - (a.y)(x.b)]

with ``c = x cross y`` and ``s = 1 - t^2``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from . import _backend
from .errors import NotSPD
from .quasi_interp import VectorFieldSamples, kernel_apply
from .sphere_core import tangent_frames
from .zonal_kernels import ZonalKernel

log = logging.getLogger(__name__)

__all__ = ["InterpSystem", "assemble", "solve", "interp_eval", "interpolate"]

JITTER_SCALE = 1e-12
#: relative residual above which the solve is reported as inaccurate
RESIDUAL_WARN = 1e-8
ROW_BLOCK = 1024


@dataclass(frozen=True)
class InterpSystem:
    """Dense interpolation system; ``factor``/``coeffs`` are set by :func:`solve`.

    Unknowns are ordered node-major: row ``2 i + a`` belongs to frame vector
    ``e_a`` at node ``i``.
    """

    kernel: ZonalKernel
    nodes: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    matrix: np.ndarray
    rhs: np.ndarray
    factor: tuple | None = None
    coeffs: np.ndarray | None = None
    jittered: bool = False
    residual: float | None = None

    @property
    def N(self) -> int:
        return len(self.nodes)

    def frames(self):
        return self.e1, self.e2

    def tangent_coeffs(self) -> np.ndarray:
        """Per-node ambient coefficient vectors ``c_j1 e_1 + c_j2 e_2``."""
        if self.coeffs is None:
            raise RuntimeError("system not solved")
        c = self.coeffs.reshape(-1, 2)
        return c[:, :1] * self.e1 + c[:, 1:] * self.e2


def _blocks(kernel, X, E, backend):
    prof = _backend.get(backend).profiles
    N = len(X)
    A = np.empty((2 * N, 2 * N))
    # frame-dependent factors for the column (source) side
    XcE = [np.cross(X, E[b]) for b in range(2)]
    for lo in range(0, N, ROW_BLOCK):
        hi = min(N, lo + ROW_BLOCK)
        Xr = X[lo:hi]
        T = np.clip(Xr @ X.T, -1.0, 1.0)
        kap, cqs = prof(kernel, T)
        for a in range(2):
            Ea = E[a][lo:hi]
            ac = np.cross(Ea, Xr) @ X.T          # a . (x cross y)
            ay = Ea @ X.T
            for b in range(2):
                cb = Xr @ XcE[b].T               # (x cross y) . b
                xb = Xr @ E[b].T
                ab = Ea @ E[b].T
                ayxb = ay * xb
                A[2 * lo + a:2 * hi:2, b::2] = (
                    cqs * (ayxb - ac * cb) + kap * ((1.0 + T) * ab - ayxb)
                )
    return A


def assemble(kernel: ZonalKernel, samples: VectorFieldSamples, backend: str | None = None) -> InterpSystem:
    """Build the frame-reduced system for the samples."""
    X = samples.points.nodes
    e1, e2 = tangent_frames(X)
    A = _blocks(kernel, X, (e1, e2), backend)
    # enforce exact symmetry; the two triangles agree to rounding
    A = 0.5 * (A + A.T)
    F = samples.values
    rhs = np.empty(2 * len(X))
    rhs[0::2] = np.einsum("ij,ij->i", e1, F)
    rhs[1::2] = np.einsum("ij,ij->i", e2, F)
    return InterpSystem(kernel=kernel, nodes=X, e1=e1, e2=e2, matrix=A, rhs=rhs)


def solve(system: InterpSystem) -> InterpSystem:
    """Cholesky solve, retrying once with diagonal jitter.

    Raises
    ------
    NotSPD
        If the jittered matrix is not numerically positive definite either.
    """
    A = system.matrix
    jittered = False
    try:
        factor = cho_factor(A, lower=True, check_finite=False)
    except LinAlgError:
        eps = JITTER_SCALE * np.trace(A) / A.shape[0]
        log.warning("Cholesky failed, retrying with jitter %.3g", eps)
        Aj = A + eps * np.eye(A.shape[0])
        try:
            factor = cho_factor(Aj, lower=True, check_finite=False)
        except LinAlgError as exc:
            raise NotSPD(f"matrix not positive definite after jitter {eps:.3g}") from exc
        jittered = True
    coeffs = cho_solve(factor, system.rhs, check_finite=False)
    res = np.linalg.norm(A @ coeffs - system.rhs)
    scale = np.linalg.norm(system.rhs)
    rel = float(res / scale) if scale > 0 else float(res)
    if rel > RESIDUAL_WARN:
        log.warning("relative residual %.3g exceeds %.0e; the system is ill-conditioned", rel, RESIDUAL_WARN)
    return replace(system, factor=factor, coeffs=coeffs, jittered=jittered, residual=rel)


def interp_eval(system: InterpSystem, eval_points, backend: str | None = None):
    """Interpolant at ``eval_points``; returns ``(div, curl)`` parts, shape (M, 3)."""
    C = system.tangent_coeffs()
    return kernel_apply(system.kernel, eval_points, system.nodes, C, np.ones(system.N), backend)


def interpolate(kernel, samples, eval_points, backend: str | None = None):
    """Assemble, solve and evaluate; returns ``(system, div, curl)``."""
    system = solve(assemble(kernel, samples, backend))
    div, curl = interp_eval(system, eval_points, backend)
    return system, div, curl
