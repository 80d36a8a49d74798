# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled weighted matrix-kernel sums.

Same contract as ``_kernels_py.kernel_sum``.  Each eval point sums its node
contributions in blocks of ``BLOCK`` nodes; block sums are combined by a
binary-carry pairwise reduction, so results do not depend on thread count.
"""
import numpy as np
cimport numpy as cnp
from cython.parallel import prange
from libc.math cimport exp, expm1, sqrt, fabs
from libc.stdlib cimport malloc, free

from .sphere_core import EPS_POLE as _EPS_POLE
from .zonal_kernels import EPS_END as _EPS_END, _kappa_limits, _wendland_polys

cnp.import_array()

DEF BLOCK = 64
DEF MAXLEVEL = 48
DEF MAXSCALES = 8
DEF MAXPOLY = 16

cdef double PI = 3.141592653589793
cdef double FOUR_PI = 4.0 * 3.141592653589793


cdef struct Profile:
    int code
    int nscale
    double c[MAXSCALES]
    double rho[MAXSCALES]
    double k1[MAXSCALES]
    double km1[MAXSCALES]
    double E[MAXSCALES]
    int npsi
    int nq
    double psi_poly[MAXPOLY]
    double q_poly[MAXPOLY]
    double eps_pole
    double eps_end


cdef inline double _horner(const double* a, int n, double r) noexcept nogil:
    cdef double acc = 0.0
    cdef int i
    for i in range(n - 1, -1, -1):
        acc = acc * r + a[i]
    return acc


cdef inline void _base(const Profile* p, int j, double t, double* psi, double* kap) noexcept nogil:
    cdef double rho = p.rho[j]
    cdef double u = 1.0 - t
    cdef double v = 1.0 + t
    cdef double r2, E, oneE, a, g, b, term, alpha, D, r
    if p.code == 1:
        r2 = rho * rho
        E = p.E[j]
        oneE = 1.0 - E
        psi[0] = exp(-u / r2) / (2.0 * PI * r2 * oneE)
        if t >= 0.0:
            a = u / r2
            g = 1.0 if a <= 0.0 else -expm1(-a) / a
            kap[0] = ((2.0 / r2) * g - oneE) / (FOUR_PI * (2.0 - u) * oneE)
        else:
            b = v / r2
            if b < 1.0:
                term = E * expm1(b) / v if v > 0.0 else E / r2
            else:
                term = (exp(-u / r2) - E) / v
            kap[0] = (oneE - 2.0 * term) / (FOUR_PI * u * oneE)
    elif p.code == 0:
        alpha = 1.0 - rho
        D = sqrt((1.0 - alpha) * (1.0 - alpha) + 2.0 * alpha * u)
        psi[0] = (1.0 - alpha * alpha) / (FOUR_PI * D * D * D)
        kap[0] = alpha * (3.0 - alpha * alpha + 2.0 * alpha * t) / (
            FOUR_PI * D * ((1.0 + alpha * t) * D + 1.0 - alpha * alpha))
    else:
        r = sqrt(2.0 * u) / rho
        if r < 1.0:
            psi[0] = _horner(p.psi_poly, p.npsi, r) / (PI * rho * rho)
            kap[0] = (4.0 * _horner(p.q_poly, p.nq, r) / (rho * rho) - 1.0) / (FOUR_PI * (2.0 - u))
        else:
            psi[0] = 0.0
            kap[0] = 1.0 / (FOUR_PI * u)


cdef inline void _profile(const Profile* p, double t, double* kap, double* cqs) noexcept nogil:
    # kappa(t) and c_Q(t) / (1 - t^2) with endpoint guards
    cdef double s = (1.0 - t) * (1.0 + t)
    cdef double ps = 0.0, ks = 0.0, pj, kj
    cdef int j
    cdef bint end = fabs(s) < p.eps_end
    for j in range(p.nscale):
        if end:
            ks = ks + p.c[j] * (p.k1[j] if t > 0.0 else p.km1[j])
        else:
            _base(p, j, t, &pj, &kj)
            ps = ps + p.c[j] * pj
            ks = ks + p.c[j] * kj
    kap[0] = ks
    if end or s < p.eps_pole:
        cqs[0] = 0.0
    else:
        cqs[0] = (1.0 / FOUR_PI - ps + 2.0 * t * ks) / s


cdef void _point_sum(const Profile* p, const double* x, const double[:, ::1] Y,
                     const double[:, ::1] F, const double[::1] w,
                     double* out) noexcept nogil:
    cdef Py_ssize_t N = Y.shape[0]
    cdef Py_ssize_t j, lo, hi
    cdef double stack[MAXLEVEL][6]
    cdef long cnt[MAXLEVEL]
    cdef int top = 0
    cdef double blk[6]
    cdef double y0, y1, y2, f0, f1, f2, t, kap, cqs, a, al, c0, c1, c2, cf, xf, yf, beta, xg
    cdef long n
    cdef int q
    lo = 0
    while lo < N:
        hi = lo + BLOCK
        if hi > N:
            hi = N
        for q in range(6):
            blk[q] = 0.0
        for j in range(lo, hi):
            y0 = Y[j, 0]; y1 = Y[j, 1]; y2 = Y[j, 2]
            f0 = F[j, 0]; f1 = F[j, 1]; f2 = F[j, 2]
            t = x[0] * y0 + x[1] * y1 + x[2] * y2
            if t > 1.0:
                t = 1.0
            elif t < -1.0:
                t = -1.0
            _profile(p, t, &kap, &cqs)
            a = w[j] * cqs
            al = w[j] * kap
            c0 = x[1] * y2 - x[2] * y1
            c1 = x[2] * y0 - x[0] * y2
            c2 = x[0] * y1 - x[1] * y0
            cf = c0 * f0 + c1 * f1 + c2 * f2
            xf = x[0] * f0 + x[1] * f1 + x[2] * f2
            yf = y0 * f0 + y1 * f1 + y2 * f2
            blk[0] += -a * cf * c0 + al * (t * f0 - xf * y0)
            blk[1] += -a * cf * c1 + al * (t * f1 - xf * y1)
            blk[2] += -a * cf * c2 + al * (t * f2 - xf * y2)
            beta = a * (xf - t * yf)
            xg = xf - yf * t
            blk[3] += beta * (y0 - t * x[0]) + al * (f0 - yf * y0 - xg * x[0])
            blk[4] += beta * (y1 - t * x[1]) + al * (f1 - yf * y1 - xg * x[1])
            blk[5] += beta * (y2 - t * x[2]) + al * (f2 - yf * y2 - xg * x[2])
        n = 1
        while top > 0 and cnt[top - 1] == n:
            for q in range(6):
                blk[q] = stack[top - 1][q] + blk[q]
            n *= 2
            top -= 1
        for q in range(6):
            stack[top][q] = blk[q]
        cnt[top] = n
        top += 1
        lo = hi
    for q in range(6):
        out[q] = 0.0
    if top > 0:
        for q in range(6):
            out[q] = stack[top - 1][q]
        for j in range(top - 2, -1, -1):
            for q in range(6):
                out[q] = stack[j][q] + out[q]


cdef int _point_sum_batch(const Profile* p, const double* x, const double[:, ::1] Y,
                          const double[:, :, ::1] F, const double[::1] w,
                          double* out) noexcept nogil:
    # as _point_sum for R fields sharing one profile evaluation per pair;
    # out holds R rows of 6
    cdef Py_ssize_t N = Y.shape[0]
    cdef Py_ssize_t R = F.shape[0]
    cdef Py_ssize_t j, lo, hi, r
    cdef Py_ssize_t width = 6 * R
    cdef double* stack = <double*> malloc(MAXLEVEL * width * sizeof(double))
    cdef double* blk = <double*> malloc(width * sizeof(double))
    cdef long cnt[MAXLEVEL]
    cdef int top = 0
    cdef double y0, y1, y2, f0, f1, f2, t, kap, cqs, a, al, c0, c1, c2, cf, xf, yf, beta, xg
    cdef double* b
    cdef long n
    cdef Py_ssize_t q
    if stack == NULL or blk == NULL:
        free(stack)
        free(blk)
        return -1
    lo = 0
    while lo < N:
        hi = lo + BLOCK
        if hi > N:
            hi = N
        for q in range(width):
            blk[q] = 0.0
        for j in range(lo, hi):
            y0 = Y[j, 0]; y1 = Y[j, 1]; y2 = Y[j, 2]
            t = x[0] * y0 + x[1] * y1 + x[2] * y2
            if t > 1.0:
                t = 1.0
            elif t < -1.0:
                t = -1.0
            _profile(p, t, &kap, &cqs)
            a = w[j] * cqs
            al = w[j] * kap
            c0 = x[1] * y2 - x[2] * y1
            c1 = x[2] * y0 - x[0] * y2
            c2 = x[0] * y1 - x[1] * y0
            for r in range(R):
                b = blk + 6 * r
                f0 = F[r, j, 0]; f1 = F[r, j, 1]; f2 = F[r, j, 2]
                cf = c0 * f0 + c1 * f1 + c2 * f2
                xf = x[0] * f0 + x[1] * f1 + x[2] * f2
                yf = y0 * f0 + y1 * f1 + y2 * f2
                b[0] += -a * cf * c0 + al * (t * f0 - xf * y0)
                b[1] += -a * cf * c1 + al * (t * f1 - xf * y1)
                b[2] += -a * cf * c2 + al * (t * f2 - xf * y2)
                beta = a * (xf - t * yf)
                xg = xf - yf * t
                b[3] += beta * (y0 - t * x[0]) + al * (f0 - yf * y0 - xg * x[0])
                b[4] += beta * (y1 - t * x[1]) + al * (f1 - yf * y1 - xg * x[1])
                b[5] += beta * (y2 - t * x[2]) + al * (f2 - yf * y2 - xg * x[2])
        n = 1
        while top > 0 and cnt[top - 1] == n:
            for q in range(width):
                blk[q] = stack[(top - 1) * width + q] + blk[q]
            n *= 2
            top -= 1
        for q in range(width):
            stack[top * width + q] = blk[q]
        cnt[top] = n
        top += 1
        lo = hi
    for q in range(width):
        out[q] = 0.0
    if top > 0:
        for q in range(width):
            out[q] = stack[(top - 1) * width + q]
        for j in range(top - 2, -1, -1):
            for q in range(width):
                out[q] = stack[j * width + q] + out[q]
    free(stack)
    free(blk)
    return 0


cdef Profile _make_profile(kernel) except *:
    cdef Profile p
    cdef int j
    weights, scales = kernel.arrays()
    if len(scales) > MAXSCALES:
        raise ValueError("too many scales in kernel combination")
    p.code = kernel.family.code
    p.nscale = len(scales)
    for j in range(p.nscale):
        p.c[j] = weights[j]
        p.rho[j] = scales[j]
        p.k1[j], p.km1[j] = _kappa_limits(p.code, scales[j])
        p.E[j] = np.exp(-2.0 / scales[j] ** 2)
    p.npsi = 0
    p.nq = 0
    if p.code in (2, 3):
        psi_poly, q_poly = _wendland_polys(p.code)
        p.npsi = len(psi_poly)
        p.nq = len(q_poly)
        for j in range(p.npsi):
            p.psi_poly[j] = psi_poly[j]
        for j in range(p.nq):
            p.q_poly[j] = q_poly[j]
    p.eps_pole = _EPS_POLE
    p.eps_end = _EPS_END
    return p


def kernel_sum(kernel, X, nodes, values, weights):
    """Weighted div/curl kernel sums; see ``_kernels_py.kernel_sum``."""
    cdef Profile p = _make_profile(kernel)
    cdef const double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef const double[:, ::1] Yv = np.ascontiguousarray(nodes, dtype=np.float64)
    cdef const double[:, ::1] Fv = np.ascontiguousarray(values, dtype=np.float64)
    cdef const double[::1] wv = np.ascontiguousarray(weights, dtype=np.float64)
    cdef Py_ssize_t M = Xv.shape[0]
    cdef Py_ssize_t i
    if Yv.shape[0] != Fv.shape[0] or Yv.shape[0] != wv.shape[0]:
        raise ValueError("nodes, values and weights differ in length")
    out = np.empty((M, 6))
    cdef double[:, ::1] ov = out
    with nogil:
        for i in prange(M, schedule="static"):
            _point_sum(&p, &Xv[i, 0], Yv, Fv, wv, &ov[i, 0])
    return out[:, :3].copy(), out[:, 3:].copy(), int(M * Yv.shape[0])


def kernel_sum_batch(kernel, X, nodes, values, weights):
    """Sums for a stack of fields ``values`` (R, N, 3); see ``_kernels_py.kernel_sum_batch``."""
    cdef Profile p = _make_profile(kernel)
    cdef const double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef const double[:, ::1] Yv = np.ascontiguousarray(nodes, dtype=np.float64)
    cdef const double[:, :, ::1] Fv = np.ascontiguousarray(values, dtype=np.float64)
    cdef const double[::1] wv = np.ascontiguousarray(weights, dtype=np.float64)
    cdef Py_ssize_t M = Xv.shape[0]
    cdef Py_ssize_t R = Fv.shape[0]
    cdef Py_ssize_t i
    cdef int failed = 0
    if Yv.shape[0] != Fv.shape[1] or Yv.shape[0] != wv.shape[0]:
        raise ValueError("nodes, values and weights differ in length")
    out = np.empty((M, R, 6))
    cdef double[:, :, ::1] ov = out
    with nogil:
        for i in prange(M, schedule="static"):
            if _point_sum_batch(&p, &Xv[i, 0], Yv, Fv, wv, &ov[i, 0, 0]) != 0:
                failed += 1
    if failed:
        raise MemoryError("could not allocate reduction buffers")
    out = out.transpose(1, 0, 2)
    return (np.ascontiguousarray(out[:, :, :3]), np.ascontiguousarray(out[:, :, 3:]),
            int(R * M * Yv.shape[0]))


def profiles(kernel, t):
    """``(kappa(t), c_Q(t) / (1 - t^2))`` elementwise; see ``_kernels_py.profiles``."""
    cdef Profile p = _make_profile(kernel)
    arr = np.ascontiguousarray(t, dtype=np.float64)
    cdef const double[::1] tv = arr.ravel()
    kap = np.empty(tv.shape[0])
    cqs = np.empty(tv.shape[0])
    cdef double[::1] kv = kap
    cdef double[::1] cv = cqs
    cdef Py_ssize_t i
    cdef double ti
    with nogil:
        for i in prange(tv.shape[0], schedule="static"):
            ti = tv[i]
            if ti > 1.0:
                ti = 1.0
            elif ti < -1.0:
                ti = -1.0
            _profile(&p, ti, &kv[i], &cv[i])
    return kap.reshape(arr.shape), cqs.reshape(arr.shape)
