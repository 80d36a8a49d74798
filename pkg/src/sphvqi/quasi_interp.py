"""Quasi-interpolation of tangent fields with matrix-valued kernels.

The approximant is the explicit weighted sum

    (L f)(x) = sum_j w_j Psi(x, x_j) f(x_j),   w_j = 4 pi / N,

and splitting ``Psi = Psi_div + Psi_curl`` yields the divergence-free and
curl-free parts of the approximation directly.  No linear system is solved.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import TangencyWarning
from .matrix_kernels import kernel_matrices
from .point_sets import PointSet
from .zonal_kernels import FourierCoeffs, ZonalKernel

log = logging.getLogger(__name__)

__all__ = [
    "VectorFieldSamples",
    "DecompositionResult",
    "qi_eval_point",
    "qi_decompose",
    "kernel_apply",
    "kernel_apply_batch",
    "EvalCounter",
    "COUNTER",
    "TANGENCY_TOL",
]

TANGENCY_TOL = 1e-8


class EvalCounter:
    """Counts kernel applications (node/eval-point pairs) across calls."""

    def __init__(self):
        self.pairs = 0

    def reset(self) -> None:
        self.pairs = 0

    def add(self, n: int) -> None:
        self.pairs += int(n)


COUNTER = EvalCounter()


@dataclass(frozen=True)
class VectorFieldSamples:
    """Vectors ``values[j]`` attached to ``points.nodes[j]``.

    Ambient (non-tangent) vectors are accepted; a :class:`TangencyWarning`
    is issued when the normal components exceed ``TANGENCY_TOL``.
    """

    points: PointSet
    values: np.ndarray

    def __post_init__(self):
        vals = np.ascontiguousarray(np.atleast_2d(np.asarray(self.values, dtype=float)))
        if vals.shape != self.points.nodes.shape:
            raise ValueError(
                f"values shape {vals.shape} does not match nodes {self.points.nodes.shape}"
            )
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def N(self) -> int:
        return self.points.N

    def normal_defect(self) -> float:
        return float(np.abs(np.einsum("ij,ij->i", self.values, self.points.nodes)).max())

    def check_tangency(self, tol: float = TANGENCY_TOL) -> bool:
        defect = self.normal_defect()
        if defect > tol:
            msg = f"sample vectors have normal components up to {defect:.3g}"
            log.warning(msg)
            warnings.warn(msg, TangencyWarning, stacklevel=3)
            return False
        return True


@dataclass(frozen=True)
class DecompositionResult:
    eval_points: np.ndarray
    div: np.ndarray
    curl: np.ndarray

    @property
    def combined(self) -> np.ndarray:
        return self.div + self.curl

    def __len__(self) -> int:
        return len(self.eval_points)


def _series_sum(coeffs: FourierCoeffs, X, nodes, values, weights):
    div = np.empty((len(X), 3))
    curl = np.empty((len(X), 3))
    for i, x in enumerate(X):
        D, C = kernel_matrices(coeffs, x, nodes)
        div[i] = np.einsum("j,jab,jb->a", weights, D, values)
        curl[i] = np.einsum("j,jab,jb->a", weights, C, values)
    return div, curl, len(X) * len(nodes)


def kernel_apply(kernel, X, nodes, values, weights, backend: str | None = None):
    """``sum_j weights[j] Psi(x, nodes[j]) values[j]`` for every row ``x`` of ``X``.

    ``kernel`` is a :class:`ZonalKernel` (closed form, summed by the selected
    backend) or :class:`FourierCoeffs` (truncated series, numpy only).
    Returns ``(div, curl)`` of shape (M, 3).
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if isinstance(kernel, FourierCoeffs):
        div, curl, count = _series_sum(kernel, X, nodes, values, weights)
    elif isinstance(kernel, ZonalKernel):
        div, curl, count = _backend.get(backend).kernel_sum(kernel, X, nodes, values, weights)
    else:
        raise TypeError(f"unsupported kernel type {type(kernel).__name__}")
    COUNTER.add(count)
    return div, curl


def kernel_apply_batch(kernel: ZonalKernel, X, nodes, values, weights, backend: str | None = None):
    """:func:`kernel_apply` for a stack of fields ``values`` (R, N, 3).

    Each kernel profile is evaluated once and applied to all R fields, and
    row ``r`` of the result equals ``kernel_apply`` on ``values[r]``.
    Returns ``(div, curl)`` of shape (R, M, 3).
    """
    if not isinstance(kernel, ZonalKernel):
        raise TypeError(f"unsupported kernel type {type(kernel).__name__}")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    div, curl, count = _backend.get(backend).kernel_sum_batch(kernel, X, nodes, values, weights)
    COUNTER.add(count)
    return div, curl


def qi_decompose(kernel, samples: VectorFieldSamples, eval_points,
                 backend: str | None = None, check: bool = True) -> DecompositionResult:
    """Divergence-free and curl-free parts of the quasi-interpolant.

    Quadrature weights come from ``samples.points`` (``4 pi / N`` unless the
    point set carries its own weights).
    """
    X = np.atleast_2d(np.asarray(eval_points, dtype=float))
    if len(X) == 0:
        raise ValueError("no evaluation points")
    if check:
        samples.check_tangency()
    w = samples.points.quadrature_weights()
    div, curl = kernel_apply(kernel, X, samples.points.nodes, samples.values, w, backend)
    return DecompositionResult(eval_points=X, div=div, curl=curl)


def qi_eval_point(kernel, samples: VectorFieldSamples, x, backend: str | None = None):
    """``(div, curl)`` of the quasi-interpolant at a single point ``x``."""
    res = qi_decompose(kernel, samples, np.asarray(x, dtype=float)[None], backend, check=False)
    return res.div[0], res.curl[0]
