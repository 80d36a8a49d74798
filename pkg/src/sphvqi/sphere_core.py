"""Geometry of the unit sphere and spherical harmonics.

Real spherical harmonics are orthonormal with respect to the surface measure
(total area 4*pi) and carry no Condon-Shortley phase.  Within degree ``ell``
the index ``k = 1 .. 2*ell + 1`` maps to the order ``m = k - ell - 1``; a
negative order selects the ``sin(|m| phi)`` harmonic.

Vector spherical harmonics follow the usual pair

    z_{l,k} = grad_* Y_{l,k} / sqrt(l(l+1)),   y_{l,k} = x cross z_{l,k},

so ``y`` spans the divergence-free and ``z`` the curl-free tangent fields.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, PoleProximity, ZeroVector

__all__ = [
    "TangentFrame",
    "normalize",
    "tangent_frame",
    "legendre_all",
    "legendre_second_derivative",
    "real_sph_harm",
    "real_sph_harm_all",
    "vec_sph_harms",
    "vec_sph_harms_all",
    "vec_harm_degrees",
    "zonal_tensors",
    "ZonalTensors",
    "cart_to_sph",
    "sph_to_cart",
    "POLE_GUARD",
    "EPS_POLE",
]

#: minimum geodesic distance (radians) from the coordinate poles for the
#: spherical-coordinate vector harmonics
POLE_GUARD = 1e-8
#: below this value of 1 - t**2 the scaled tensors Q~, V~ are returned as zero
EPS_POLE = 1e-12


def normalize(v) -> np.ndarray:
    """Scale a 3-vector (or an ``(n, 3)`` stack) onto the unit sphere."""
    v = np.asarray(v, dtype=float)
    norm = np.linalg.norm(v, axis=-1, keepdims=True)
    if np.any(norm <= 1e-14):
        raise ZeroVector("cannot normalize a vector of norm <= 1e-14")
    return v / norm


@dataclass(frozen=True)
class TangentFrame:
    base: np.ndarray
    e1: np.ndarray
    e2: np.ndarray


def _frame_arrays(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # seed with the coordinate axis of smallest |component|; the frame jumps
    # where two components tie in magnitude (measure zero)
    x = np.atleast_2d(x)
    idx = np.argmin(np.abs(x), axis=1)
    seed = np.zeros_like(x)
    seed[np.arange(len(x)), idx] = 1.0
    e1 = seed - np.sum(seed * x, axis=1, keepdims=True) * x
    e1 /= np.linalg.norm(e1, axis=1, keepdims=True)
    e2 = np.cross(x, e1)
    return e1, e2


def tangent_frame(x) -> TangentFrame:
    """Deterministic right-handed orthonormal frame ``(e1, e2, x)`` at ``x``.

    ``e1 x e2 = x``.  The frame is continuous except where two components of
    ``x`` tie in absolute value.
    """
    x = np.asarray(x, dtype=float)
    e1, e2 = _frame_arrays(x)
    return TangentFrame(base=x.copy(), e1=e1[0], e2=e2[0])


def tangent_frames(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised :func:`tangent_frame`; returns ``(e1, e2)`` of shape (n, 3)."""
    return _frame_arrays(np.asarray(x, dtype=float))


def legendre_all(L: int, t):
    """Legendre polynomials and first derivatives for degrees ``0..L``.

    Parameters
    ----------
    L : int
        Maximum degree.
    t : float or array_like
        Arguments in ``[-1, 1]``.

    Returns
    -------
    P, dP : ndarray
        Arrays of shape ``(L + 1,) + t.shape`` with ``P_l(t)`` and ``P_l'(t)``.
        ``P_l(1) == 1`` exactly.
    """
    t = np.asarray(t, dtype=float)
    if L < 0:
        raise ValueError("L must be >= 0")
    if np.any(np.abs(t) > 1 + 1e-12):
        raise DomainError("Legendre argument outside [-1, 1]")
    t = np.clip(t, -1.0, 1.0)
    P = np.empty((L + 1,) + t.shape)
    dP = np.empty_like(P)
    P[0] = 1.0
    dP[0] = 0.0
    if L >= 1:
        P[1] = t
        dP[1] = 1.0
    for ell in range(2, L + 1):
        P[ell] = ((2 * ell - 1) * t * P[ell - 1] - (ell - 1) * P[ell - 2]) / ell
        # P'_l = P'_{l-2} + (2l - 1) P_{l-1}
        dP[ell] = dP[ell - 2] + (2 * ell - 1) * P[ell - 1]
    return P, dP


def legendre_second_derivative(L: int, t):
    """Second derivatives ``P_l''(t)`` for ``l = 0..L``.

    Uses the differentiated derivative recurrence ``P''_l = P''_{l-2} +
    (2l-1) P'_{l-1}``, which is valid on the closed interval.
    """
    P, dP = legendre_all(L, t)
    d2P = np.zeros_like(P)
    for ell in range(2, L + 1):
        d2P[ell] = d2P[ell - 2] + (2 * ell - 1) * dP[ell - 1]
    return d2P


def cart_to_sph(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Colatitude ``theta`` and longitude ``phi`` of unit vectors."""
    x = np.asarray(x, dtype=float)
    theta = np.arctan2(np.hypot(x[..., 0], x[..., 1]), x[..., 2])
    phi = np.arctan2(x[..., 1], x[..., 0])
    return theta, phi


def sph_to_cart(theta, phi) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    st = np.sin(theta)
    return np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], axis=-1)


def _assoc_legendre_rows(L: int, theta: np.ndarray, with_derivative: bool):
    """Yield ``(l, Pbar_l, dPbar_l)`` for ``l = 0..L``.

    ``Pbar_l`` has shape ``(l + 1, n)`` with row ``m`` holding the normalised
    associated Legendre function ``Pbar_l^m(cos theta)``, scaled so that
    ``Y_{l,0} = Pbar_l^0`` and ``Y_{l,+-m} = sqrt(2) Pbar_l^m cos/sin(m phi)``.
    The recurrence runs over degree with all orders vectorised.
    ``dPbar_l`` holds theta-derivatives (or ``None``).
    """
    ct = np.cos(theta)
    st = np.sin(theta)
    n = theta.shape[0]
    prev2 = None
    prev = None
    for ell in range(L + 1):
        cur = np.empty((ell + 1, n))
        if ell == 0:
            cur[0] = 1.0 / np.sqrt(4.0 * np.pi)
        else:
            cur[ell] = np.sqrt((2.0 * ell + 1.0) / (2.0 * ell)) * st * prev[ell - 1]
            cur[ell - 1] = np.sqrt(2.0 * ell + 1.0) * ct * prev[ell - 1]
            if ell >= 2:
                m = np.arange(ell - 1, dtype=float)[:, None]
                a = np.sqrt((4.0 * ell * ell - 1.0) / (ell * ell - m * m))
                b = np.sqrt(((ell - 1.0) ** 2 - m * m) / (4.0 * (ell - 1.0) ** 2 - 1.0))
                cur[: ell - 1] = a * (ct * prev[: ell - 1] - b * prev2[: ell - 1])
        dcur = None
        if with_derivative:
            # sin(theta) dPbar/dtheta = l cos(theta) Pbar_l^m - c_lm Pbar_{l-1}^m
            dcur = ell * ct * cur
            if ell >= 1:
                m = np.arange(ell, dtype=float)[:, None]
                c = np.sqrt((ell * ell - m * m) * (2.0 * ell + 1.0) / (2.0 * ell - 1.0))
                dcur[:ell] -= c * prev
            dcur = dcur / st
        yield ell, cur, dcur
        prev2, prev = prev, cur


def _trig_rows(ell: int, phi: np.ndarray):
    m = np.arange(1, ell + 1, dtype=float)[:, None]
    return np.cos(m * phi), np.sin(m * phi), m


def _degree_block(ell, p, dp, phi, st):
    """Real harmonics and their (theta, phi/sin) derivative coefficients.

    Rows follow ``k = 1..2l+1`` (order ``m = k - l - 1``).  Returns
    ``(Y, a, b)`` with ``grad_* Y = a e_theta + b e_phi``.
    """
    n = phi.shape[0]
    Y = np.empty((2 * ell + 1, n))
    a = np.empty_like(Y)
    b = np.empty_like(Y)
    Y[ell] = p[0]
    if dp is not None:
        a[ell] = dp[0]
        b[ell] = 0.0
    if ell > 0:
        cm, sm, m = _trig_rows(ell, phi)
        sq2 = np.sqrt(2.0)
        # m > 0 -> cos, index l + m ; m < 0 -> sin, index l - |m|
        Y[ell + 1:] = sq2 * p[1:] * cm
        Y[ell - 1::-1] = sq2 * p[1:] * sm
        if dp is not None:
            a[ell + 1:] = sq2 * dp[1:] * cm
            a[ell - 1::-1] = sq2 * dp[1:] * sm
            q = sq2 * m * p[1:] / st
            b[ell + 1:] = -q * sm
            b[ell - 1::-1] = q * cm
    return Y, a, b


def _check_index(ell: int, k: int) -> int:
    if ell < 0 or not 1 <= k <= 2 * ell + 1:
        raise IndexError(f"harmonic index k={k} outside 1..{2 * ell + 1} for degree {ell}")
    return k - ell - 1


def real_sph_harm_all(L: int, x) -> np.ndarray:
    """All real harmonics ``Y_{l,k}`` for ``l <= L`` at points ``x``.

    Returns an array of shape ``((L + 1)**2, n)``; row ``l*l + k - 1`` holds
    ``Y_{l,k}``.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    theta, phi = cart_to_sph(x)
    st = np.sin(theta)
    out = np.empty(((L + 1) ** 2, len(x)))
    for ell, p, _ in _assoc_legendre_rows(L, theta, with_derivative=False):
        Y, _, _ = _degree_block(ell, p, None, phi, st)
        out[ell * ell:(ell + 1) ** 2] = Y
    return out


def real_sph_harm(ell: int, k: int, x):
    """Orthonormal real spherical harmonic ``Y_{ell,k}`` at ``x``.

    ``x`` may be a single unit vector or an ``(n, 3)`` array.
    """
    _check_index(ell, k)
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    val = real_sph_harm_all(ell, np.atleast_2d(x))[ell * ell + k - 1]
    return float(val[0]) if single else val


def _check_poles(theta: np.ndarray) -> None:
    if np.any(np.minimum(theta, np.pi - theta) <= POLE_GUARD):
        raise PoleProximity(
            f"point within {POLE_GUARD} rad of a coordinate pole; "
            "vector harmonics are evaluated in spherical coordinates"
        )


def _local_basis(theta, phi):
    ct, st = np.cos(theta), np.sin(theta)
    cp, sp = np.cos(phi), np.sin(phi)
    e_theta = np.stack([ct * cp, ct * sp, -st], axis=-1)
    e_phi = np.stack([-sp, cp, np.zeros_like(phi)], axis=-1)
    return e_theta, e_phi


def vec_harm_degrees(L: int, x):
    """Yield ``(l, a, b, e_theta, e_phi)`` for ``l = 1..L``.

    ``z_{l,k} = a[k-1] e_theta + b[k-1] e_phi`` where ``a, b`` have shape
    ``(2l + 1, n)``.  This is the memory-light form used by the series
    oracles; ``y_{l,k} = x cross z_{l,k}``.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    theta, phi = cart_to_sph(x)
    _check_poles(theta)
    st = np.sin(theta)
    e_th, e_ph = _local_basis(theta, phi)
    for ell, p, dp in _assoc_legendre_rows(L, theta, with_derivative=True):
        if ell == 0:
            continue
        _, a, b = _degree_block(ell, p, dp, phi, st)
        scale = 1.0 / np.sqrt(ell * (ell + 1.0))
        yield ell, scale * a, scale * b, e_th, e_ph


def vec_sph_harms_all(L: int, x) -> tuple[np.ndarray, np.ndarray]:
    """Vector harmonics ``y_{l,k}``, ``z_{l,k}`` for ``1 <= l <= L``.

    Returns two arrays of shape ``((L + 1)**2, n, 3)`` indexed like
    :func:`real_sph_harm_all`; the ``l = 0`` row is zero.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    z = np.zeros(((L + 1) ** 2, len(x), 3))
    for ell, a, b, e_th, e_ph in vec_harm_degrees(L, x):
        z[ell * ell:(ell + 1) ** 2] = a[:, :, None] * e_th + b[:, :, None] * e_ph
    y = np.cross(x[None, :, :], z)
    return y, z


def vec_sph_harms(ell: int, k: int, x):
    """The pair ``(y_{ell,k}(x), z_{ell,k}(x))``.

    Raises :class:`PoleProximity` within ``POLE_GUARD`` of the poles.
    """
    if ell < 1:
        raise IndexError("vector harmonics start at degree 1")
    _check_index(ell, k)
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    y, z = vec_sph_harms_all(ell, np.atleast_2d(x))
    y, z = y[ell * ell + k - 1], z[ell * ell + k - 1]
    if single:
        return y[0], z[0]
    return y, z


@dataclass(frozen=True)
class ZonalTensors:
    Q: np.ndarray
    R: np.ndarray
    V: np.ndarray
    W: np.ndarray
    Qs: np.ndarray  # Q / (1 - t^2)
    Vs: np.ndarray  # V / (1 - t^2)
    t: float


def zonal_tensors(x, y) -> ZonalTensors:
    """The first-order tensors ``Q, R, V, W`` and their scaled forms.

    ``Qs = Q / (1 - t^2)`` and ``Vs = V / (1 - t^2)`` are zero matrices when
    ``1 - t^2 < EPS_POLE``; every caller multiplies them by a coefficient that
    vanishes at ``t = +-1``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    t = float(x @ y)
    c = np.cross(x, y)
    s = float(c @ c)
    eye = np.eye(3)
    Q = -np.outer(c, c)
    R = t * eye - np.outer(y, x)
    a = y - t * x
    b = x - t * y
    V = np.outer(a, b)
    W = (eye - np.outer(x, x)) @ (eye - np.outer(y, y))
    if s < EPS_POLE:
        Qs = np.zeros((3, 3))
        Vs = np.zeros((3, 3))
    else:
        Qs = Q / s
        Vs = V / s
    return ZonalTensors(Q=Q, R=R, V=V, W=W, Qs=Qs, Vs=Vs, t=t)
