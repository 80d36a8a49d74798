"""Scaled zonal kernels, their auxiliary functions and Fourier-Legendre data.

Every kernel is normalised so that its mean over the sphere is one
(``psi_hat(0) == 1``).  The auxiliary function

    kappa(t) = 1 / (4 pi (1 - t^2)) * int_{-1}^{t} (1 - 4 pi psi(s)) ds

is evaluated from closed forms rearranged so that no 0/0 quotient is formed
near ``t = +-1``.  The coefficient of the scaled tensors,

    c_Q(t) = 1/(4 pi) - psi(t) + 2 t kappa(t) = (1 - t^2) kappa'(t),

vanishes at both endpoints.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.special import ive

from .errors import DomainError, DuplicateScale
from .sphere_core import legendre_all

__all__ = [
    "KernelFamily",
    "ZonalKernel",
    "FourierCoeffs",
    "make_kernel",
    "make_combo",
    "kernel_for_order",
    "psi_eval",
    "kappa_eval",
    "cq_eval",
    "fourier_coeffs",
    "COMBO_SCALES",
    "EPS_END",
]

FOUR_PI = 4.0 * np.pi
#: |1 - t^2| below which kappa and c_Q switch to their endpoint limits
EPS_END = 1e-9

#: squared scale factors a_j of the higher-order linear combinations
COMBO_SCALES = {
    2: (1.0,),
    4: (1.0 / 2.0, 2.0 / 3.0),
    6: (1.0 / 3.0, 2.0 / 3.0, 1.0),
    8: (1.0 / 4.0, 1.0 / 2.0, 3.0 / 4.0, 1.0),
}


class KernelFamily(str, enum.Enum):
    POISSON = "poisson"
    GAUSSIAN = "gaussian"
    WE31 = "we31"
    WE32 = "we32"

    @property
    def code(self) -> int:
        return _FAMILY_CODES[self]

    @property
    def compact(self) -> bool:
        return self in (KernelFamily.WE31, KernelFamily.WE32)


_FAMILY_CODES = {
    KernelFamily.POISSON: 0,
    KernelFamily.GAUSSIAN: 1,
    KernelFamily.WE31: 2,
    KernelFamily.WE32: 3,
}


def _scale_ok(family: KernelFamily, rho: float) -> bool:
    # Poisson needs alpha = 1 - rho in (0, 1); a Wendland support of chord
    # radius rho lies on the sphere (and stays normalised) for rho <= 2
    if family is KernelFamily.POISSON:
        return 0.0 < rho < 1.0
    if family.compact:
        return 0.0 < rho <= 2.0
    return 0.0 < rho < np.inf


@dataclass(frozen=True)
class ZonalKernel:
    """A scaled zonal kernel, possibly a linear combination of base kernels.

    The kernel is ``sum_j weights[j] * psi_base(t; scales[j])`` where
    ``psi_base`` is the family's normalised kernel.  ``rho`` is the nominal
    scale and ``order`` the approximation order ``m`` (metadata only).
    """

    family: KernelFamily
    rho: float
    weights: tuple = (1.0,)
    scales: tuple = ()
    order: int = 2
    a_list: tuple = field(default=(1.0,), repr=False)

    def __post_init__(self):
        family = KernelFamily(self.family)
        object.__setattr__(self, "family", family)
        if not self.scales:
            object.__setattr__(self, "scales", (float(self.rho),))
        for s in (self.rho,) + tuple(self.scales):
            if not _scale_ok(family, s):
                raise ValueError(f"scale {s} outside the admissible range for {family.value}")
        if len(self.weights) != len(self.scales):
            raise ValueError("weights and scales differ in length")
        if abs(sum(self.weights) - 1.0) > 1e-12:
            raise ValueError("combination weights must sum to one")
        allowed = {1} if family is KernelFamily.POISSON else {2, 4, 6, 8}
        if self.order not in allowed:
            raise ValueError(f"order {self.order} not available for {family.value}")

    @property
    def label(self) -> str:
        return f"{self.family.value}-m{self.order}-rho{self.rho:.6g}"

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return np.asarray(self.weights, dtype=float), np.asarray(self.scales, dtype=float)

    def with_rho(self, rho: float) -> "ZonalKernel":
        if self.family is KernelFamily.POISSON or self.order == 2:
            return make_kernel(self.family, rho)
        return make_combo(self.family, rho, self.a_list)


def make_kernel(family, rho: float) -> ZonalKernel:
    """Plain base kernel of the family (order 1 for Poisson, 2 otherwise)."""
    family = KernelFamily(family)
    order = 1 if family is KernelFamily.POISSON else 2
    return ZonalKernel(family=family, rho=float(rho), order=order)


def make_combo(family, rho: float, a_list) -> ZonalKernel:
    """Higher-order kernel ``sum_j c_j psi(t; sqrt(a_j) rho)``.

    ``c_j = prod_{k != j} a_k / (a_k - a_j)``; the weights sum to one, so the
    combination is still normalised.
    """
    family = KernelFamily(family)
    if family is KernelFamily.POISSON:
        raise ValueError("combinations are built from order-2 base kernels")
    a = [float(v) for v in a_list]
    if any(v <= 0 for v in a):
        raise ValueError("scale factors must be positive")
    for i in range(len(a)):
        for j in range(i + 1, len(a)):
            if abs(a[i] - a[j]) < 1e-12:
                raise DuplicateScale(f"repeated scale factor {a[i]}")
    weights = []
    for j, aj in enumerate(a):
        c = 1.0
        for k, ak in enumerate(a):
            if k != j:
                c *= ak / (ak - aj)
        weights.append(c)
    order = 2 * len(a)
    scales = tuple(np.sqrt(aj) * rho for aj in a)
    return ZonalKernel(
        family=family,
        rho=float(rho),
        weights=tuple(weights),
        scales=scales,
        order=order,
        a_list=tuple(a),
    )


def kernel_for_order(family, rho: float, order: int) -> ZonalKernel:
    """Base kernel for ``order`` 1/2, the standard combination otherwise."""
    family = KernelFamily(family)
    if order in (1, 2):
        return make_kernel(family, rho)
    return make_combo(family, rho, COMBO_SCALES[order])


# --- base kernels -----------------------------------------------------------

@lru_cache(maxsize=None)
def _wendland_polys(code: int):
    """Coefficient arrays (in r) for psi*pi*rho^2 and q(r) = (1 - p(r)) / r^2."""
    one_minus_r = np.array([1.0, -1.0])
    if code == 2:
        psi_poly = 7.0 * npoly.polymul(npoly.polypow(one_minus_r, 4), [1.0, 4.0])
        p = npoly.polymul(npoly.polypow(one_minus_r, 5), [1.0, 5.0, 8.0])
    else:
        psi_poly = 3.0 * npoly.polymul(npoly.polypow(one_minus_r, 6), [3.0, 18.0, 35.0])
        p = npoly.polymul(npoly.polypow(one_minus_r, 7), [1.0, 7.0, 19.0, 21.0])
    one_minus_p = npoly.polysub([1.0], p)
    # p(0) = 1 and p'(0) = 0, so 1 - p(r) is divisible by r^2
    if abs(one_minus_p[0]) > 1e-12 or abs(one_minus_p[1]) > 1e-12:
        raise AssertionError("Wendland antiderivative lost its double root")
    q = one_minus_p[2:]
    return psi_poly, q


def _check_t(t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if np.any(np.abs(t) > 1.0 + 1e-12) or np.any(np.isnan(t)):
        raise DomainError("zonal argument outside [-1, 1]")
    return np.clip(t, -1.0, 1.0)


def _psi_base(code: int, rho: float, t: np.ndarray) -> np.ndarray:
    u = 1.0 - t
    if code == 1:
        E = np.exp(-2.0 / rho**2)
        return np.exp(-u / rho**2) / (2.0 * np.pi * rho**2 * (1.0 - E))
    if code == 0:
        alpha = 1.0 - rho
        D2 = (1.0 - alpha) ** 2 + 2.0 * alpha * u
        return (1.0 - alpha**2) / (FOUR_PI * D2 * np.sqrt(D2))
    psi_poly, _ = _wendland_polys(code)
    r = np.sqrt(2.0 * u) / rho
    inside = r < 1.0
    out = np.zeros_like(t)
    out[inside] = npoly.polyval(r[inside], psi_poly) / (np.pi * rho**2)
    return out


def _psi_at_one(code: int, rho: float) -> float:
    return float(_psi_base(code, rho, np.array([1.0]))[0])


def _psi_at_minus_one(code: int, rho: float) -> float:
    return float(_psi_base(code, rho, np.array([-1.0]))[0])


def _kappa_base(code: int, rho: float, t: np.ndarray) -> np.ndarray:
    u = 1.0 - t
    v = 1.0 + t
    out = np.empty_like(t)
    if code == 1:
        r2 = rho**2
        E = np.exp(-2.0 / r2)
        one_E = 1.0 - E
        hi = t >= 0.0
        uh = u[hi]
        a = uh / r2
        g = np.ones_like(a)
        nz = a > 0
        g[nz] = -np.expm1(-a[nz]) / a[nz]
        out[hi] = ((2.0 / r2) * g - one_E) / (FOUR_PI * (2.0 - uh) * one_E)
        lo = ~hi
        ul, vl = u[lo], v[lo]
        b = vl / r2
        term = np.empty_like(vl)
        small = b < 1.0
        with np.errstate(divide="ignore", invalid="ignore"):
            term[small] = np.where(
                vl[small] > 0, E * np.expm1(b[small]) / vl[small], E / r2
            )
            term[~small] = (np.exp(-ul[~small] / r2) - E) / vl[~small]
        out[lo] = (one_E - 2.0 * term) / (FOUR_PI * ul * one_E)
        return out
    if code == 0:
        alpha = 1.0 - rho
        D = np.sqrt((1.0 - alpha) ** 2 + 2.0 * alpha * u)
        return alpha * (3.0 - alpha**2 + 2.0 * alpha * t) / (
            FOUR_PI * D * ((1.0 + alpha * t) * D + 1.0 - alpha**2)
        )
    _, q = _wendland_polys(code)
    r = np.sqrt(2.0 * u) / rho
    inside = r < 1.0
    out[inside] = (4.0 * npoly.polyval(r[inside], q) / rho**2 - 1.0) / (
        FOUR_PI * (2.0 - u[inside])
    )
    out[~inside] = 1.0 / (FOUR_PI * u[~inside])
    return out


def _kappa_limits(code: int, rho: float) -> tuple[float, float]:
    k1 = (FOUR_PI * _psi_at_one(code, rho) - 1.0) / (8.0 * np.pi)
    km1 = (1.0 - FOUR_PI * _psi_at_minus_one(code, rho)) / (8.0 * np.pi)
    return k1, km1


# --- public evaluation ------------------------------------------------------

def psi_eval(kernel: ZonalKernel, t):
    """Kernel profile ``psi(t)``; scalar in, scalar out."""
    tt = _check_t(t)
    scalar = tt.ndim == 0
    tt = np.atleast_1d(tt)
    code = kernel.family.code
    out = np.zeros_like(tt)
    for c, s in zip(kernel.weights, kernel.scales):
        out += c * _psi_base(code, s, tt)
    return float(out[0]) if scalar else out


def kappa_eval(kernel: ZonalKernel, t):
    """Auxiliary function ``kappa(t)`` with analytic endpoint limits."""
    tt = _check_t(t)
    scalar = tt.ndim == 0
    tt = np.atleast_1d(tt)
    code = kernel.family.code
    end_hi = np.abs(1.0 - tt * tt) < EPS_END
    out = np.zeros_like(tt)
    for c, s in zip(kernel.weights, kernel.scales):
        val = _kappa_base(code, s, np.where(end_hi, 0.0, tt))
        k1, km1 = _kappa_limits(code, s)
        val = np.where(end_hi, np.where(tt > 0, k1, km1), val)
        out += c * val
    return float(out[0]) if scalar else out


def cq_eval(kernel: ZonalKernel, t):
    """``c_Q(t) = 1/(4 pi) - psi(t) + 2 t kappa(t)``, exactly 0 at the ends."""
    tt = _check_t(t)
    scalar = tt.ndim == 0
    tt = np.atleast_1d(tt)
    val = 1.0 / FOUR_PI - psi_eval(kernel, tt) + 2.0 * tt * kappa_eval(kernel, tt)
    val = np.where(np.abs(1.0 - tt * tt) < EPS_END, 0.0, val)
    return float(val[0]) if scalar else val


# --- Fourier-Legendre coefficients -----------------------------------------

@dataclass(frozen=True)
class FourierCoeffs:
    """``psi_hat(l)`` for ``l = 0..L`` of ``kernel``.

    ``psi_hat(l) = 2 pi int_{-1}^{1} psi(t) P_l(t) dt`` so that
    ``psi(x.y) = sum_l psi_hat(l) sum_k Y_{l,k}(x) Y_{l,k}(y)``.
    """

    kernel: ZonalKernel
    values: np.ndarray
    n_quad: int

    @property
    def L(self) -> int:
        return len(self.values) - 1

    def truncated(self, L: int) -> "FourierCoeffs":
        return FourierCoeffs(self.kernel, self.values[: L + 1].copy(), self.n_quad)


def _gl_on(a: float, b: float, n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (b - a) * x + 0.5 * (b + a), 0.5 * (b - a) * w


def _gaussian_coeffs(rho: float, L: int) -> np.ndarray:
    # int_{-1}^{1} exp(z (t - 1)) P_l(t) dt = sqrt(2 pi / z) ive(l + 1/2, z)
    z = 1.0 / rho**2
    E = np.exp(-2.0 * z)
    ell = np.arange(L + 1, dtype=float)
    return z * np.sqrt(2.0 * np.pi / z) * ive(ell + 0.5, z) / (1.0 - E)


def _base_coeffs(code: int, rho: float, L: int, n: int, exact: bool = True) -> np.ndarray:
    if code == 1 and exact:
        return _gaussian_coeffs(rho, L)
    if code in (2, 3):
        # polynomial in r on the support: dt = -rho^2 r dr, exact for n large
        r, w = _gl_on(0.0, 1.0, n)
        t = 1.0 - 0.5 * rho**2 * r**2
        psi_poly, _ = _wendland_polys(code)
        vals = npoly.polyval(r, psi_poly) / (np.pi * rho**2) * rho**2 * r * w
        P, _ = legendre_all(L, t)
        return 2.0 * np.pi * (P @ vals)
    if code == 1:
        width = min(2.0, 60.0 * rho**2)
        pieces = [(1.0 - width, 1.0)]
        if width < 2.0:
            pieces.append((-1.0, 1.0 - width))
    else:
        pieces = [(0.0, 1.0), (-1.0, 0.0)]
    total = np.zeros(L + 1)
    for a, b in pieces:
        t, w = _gl_on(a, b, n)
        P, _ = legendre_all(L, t)
        total += P @ (_psi_base(code, rho, t) * w)
    return 2.0 * np.pi * total


def fourier_coeffs(
    kernel: ZonalKernel, L: int, n_quad: int | None = None, quadrature_only: bool = False
) -> FourierCoeffs:
    """Fourier-Legendre coefficients ``psi_hat(0..L)``.

    Wendland kernels are integrated in the radial variable on their support,
    where the integrand is a polynomial; the default node count
    ``max(512, 4 L)`` is then exact.  Poisson uses Gauss-Legendre quadrature.
    Gaussian coefficients come from the modified Bessel closed form, which
    keeps the tiny high-degree values positive; ``quadrature_only=True``
    forces quadrature for every family (used as a cross-check).
    """
    if n_quad is None:
        n_quad = max(512, 4 * L)
    code = kernel.family.code
    vals = np.zeros(L + 1)
    for c, s in zip(kernel.weights, kernel.scales):
        vals += c * _base_coeffs(code, s, L, n_quad, exact=not quadrature_only)
    return FourierCoeffs(kernel=kernel, values=vals, n_quad=n_quad)
