import numpy as np
import pytest
from scipy.integrate import quad

from sphvqi.errors import DomainError, DuplicateScale
from sphvqi.sphere_core import legendre_all
from sphvqi.zonal_kernels import (
    COMBO_SCALES,
    KernelFamily,
    cq_eval,
    fourier_coeffs,
    kappa_eval,
    kernel_for_order,
    make_combo,
    make_kernel,
    psi_eval,
)

FAMILIES = ["poisson", "gaussian", "we31", "we32"]


def kappa_by_quadrature(kernel, t):
    """Defining integral of kappa, integrated with scipy's adaptive rule."""
    pts = None
    if kernel.family.compact:
        pts = [1 - 0.5 * s**2 for s in kernel.scales if -1 < 1 - 0.5 * s**2 < t]
    val, _ = quad(lambda s: 1 - 4 * np.pi * psi_eval(kernel, s), -1.0, t,
                  points=pts or None, epsabs=1e-13, epsrel=1e-13, limit=400)
    return val / (4 * np.pi * (1 - t * t))


def test_gaussian_peak():
    # the profile carries the normalising factor 1 / (1 - exp(-2 / rho^2))
    for rho in (0.1, 0.5, 0.9):
        k = make_kernel("gaussian", rho)
        E = np.exp(-2 / rho**2)
        assert psi_eval(k, 1.0) == pytest.approx(1 / (2 * np.pi * rho**2 * (1 - E)), rel=1e-13)
        assert psi_eval(k, 1.0) == pytest.approx(1 / (2 * np.pi * rho**2), rel=2 * E)


def test_we31_compact_support():
    k = make_kernel("we31", 0.3)
    t = np.linspace(-1, 1 - 0.5 * 0.3**2, 50)
    assert np.all(psi_eval(k, t) == 0.0)


def test_gaussian_normalisation_gl512():
    x, w = np.polynomial.legendre.leggauss(512)
    k = make_kernel("gaussian", 0.5)
    assert abs(2 * np.pi * w @ psi_eval(k, x) - 1) < 1e-8


@pytest.mark.parametrize("family", FAMILIES)
@pytest.mark.parametrize("rho", [0.5, 0.2, 0.1])
def test_normalisation_coefficient(family, rho):
    c = fourier_coeffs(make_kernel(family, rho), 4)
    assert abs(c.values[0] - 1) < 1e-8


def test_domain_error():
    k = make_kernel("gaussian", 0.5)
    for f in (psi_eval, kappa_eval, cq_eval):
        with pytest.raises(DomainError):
            f(k, 1.01)


def test_gaussian_kappa_at_one():
    for rho in (0.3, 0.5):
        k = make_kernel("gaussian", rho)
        E = np.exp(-2 / rho**2)
        want = (2 / (rho**2 * (1 - E)) - 1) / (8 * np.pi)
        assert kappa_eval(k, 1.0) == pytest.approx(want, rel=1e-12)
        assert kappa_eval(k, 1.0) == pytest.approx((2 / rho**2 - 1) / (8 * np.pi), rel=2 * E)
        # numerical limit from inside
        assert kappa_eval(k, 1 - 1e-7) == pytest.approx(want, rel=1e-5)


@pytest.mark.parametrize("family", FAMILIES)
def test_kappa_matches_defining_integral(family):
    k = make_kernel(family, 0.5)
    t = np.cos(np.linspace(0.02, np.pi - 0.02, 200))
    got = kappa_eval(k, t)
    want = np.array([kappa_by_quadrature(k, ti) for ti in t])
    assert np.abs(got - want).max() < 1e-8


@pytest.mark.parametrize("family", ["gaussian", "we32"])
@pytest.mark.parametrize("order", [4, 8])
def test_combo_kappa_matches_defining_integral(family, order):
    k = kernel_for_order(family, 0.6, order)
    t = np.linspace(-0.95, 0.95, 25)
    want = np.array([kappa_by_quadrature(k, ti) for ti in t])
    assert np.abs(kappa_eval(k, t) - want).max() < 1e-8


def test_combo_example_weights_and_linearity():
    k = make_combo("gaussian", 0.5, [0.5, 2 / 3])
    assert k.weights == pytest.approx((4.0, -3.0), abs=1e-12)
    b1 = make_kernel("gaussian", np.sqrt(0.5) * 0.5)
    b2 = make_kernel("gaussian", np.sqrt(2 / 3) * 0.5)
    t = np.linspace(-1, 1, 101)
    for f in (psi_eval, kappa_eval, cq_eval):
        assert np.abs(f(k, t) - (4 * f(b1, t) - 3 * f(b2, t))).max() < 1e-12 * max(1, np.abs(f(k, t)).max())


def test_combo_weight_sums():
    for a in COMBO_SCALES.values():
        k = make_combo("we32", 0.5, a)
        assert abs(sum(k.weights) - 1) < 1e-12
    k = make_combo("gaussian", 0.5, [1 / 3, 2 / 3, 1])
    # direct product formula
    a = np.array([1 / 3, 2 / 3, 1])
    c = [np.prod([a[m] / (a[m] - a[j]) for m in range(3) if m != j]) for j in range(3)]
    assert k.weights == pytest.approx(tuple(c), abs=1e-12)


def test_duplicate_scale():
    with pytest.raises(DuplicateScale):
        make_combo("gaussian", 0.5, [0.5, 0.5])


def test_kernel_validation():
    with pytest.raises(ValueError):
        make_kernel("poisson", 1.2)
    with pytest.raises(ValueError):
        make_kernel("we32", 2.5)
    with pytest.raises(ValueError):
        kernel_for_order("poisson", 0.5, 4)
    assert make_kernel("poisson", 0.5).order == 1
    assert KernelFamily("we32").compact


@pytest.mark.parametrize("family", FAMILIES)
def test_cq_vanishes_at_ends(family):
    k = make_kernel(family, 0.4)
    assert cq_eval(k, 1.0) == 0.0 and cq_eval(k, -1.0) == 0.0
    # the unguarded formula tends to 0 linearly in 1 - t^2
    for end in (1.0, -1.0):
        raw = [abs(1 / (4 * np.pi) - psi_eval(k, t) + 2 * t * kappa_eval(k, t))
               for t in (end * (1 - 1e-5), end * (1 - 1e-6))]
        assert raw[1] < 0.2 * raw[0] or raw[1] < 1e-12


@pytest.mark.parametrize("family", FAMILIES)
def test_cq_is_scaled_kappa_derivative(family):
    k = make_kernel(family, 0.5)
    h = 1e-5
    t = np.linspace(-0.9, 0.9, 37)
    fd = (kappa_eval(k, t + h) - kappa_eval(k, t - h)) / (2 * h)
    assert np.abs(cq_eval(k, t) / (1 - t**2) - fd).max() < 1e-6


@pytest.mark.parametrize("family", FAMILIES)
def test_kappa_endpoint_continuity(family):
    k = make_kernel(family, 0.5)
    for end in (1.0, -1.0):
        lim = kappa_eval(k, end)
        gaps = [abs(kappa_eval(k, end * (1 - 10.0**-j)) - lim) for j in range(3, 11)]
        assert all(b <= a for a, b in zip(gaps, gaps[1:]))
        assert gaps[-1] < 1e-6


def test_gaussian_coefficients_positive():
    c = fourier_coeffs(make_kernel("gaussian", 0.5), 100)
    assert np.all(c.values > 0)
    # quadrature oracle at doubled node count, where it still resolves them
    q = fourier_coeffs(make_kernel("gaussian", 0.5), 100, n_quad=1024, quadrature_only=True)
    big = q.values > 1e-12
    assert np.abs(c.values[big] - q.values[big]).max() < 1e-12


def test_bessel_matches_quadrature_small_rho():
    k = make_kernel("gaussian", 0.05)
    a = fourier_coeffs(k, 60)
    b = fourier_coeffs(k, 60, n_quad=2048, quadrature_only=True)
    assert np.abs(a.values - b.values).max() < 1e-10


def test_wendland_coefficients_against_generic_quadrature():
    for fam in ("we31", "we32"):
        k = make_kernel(fam, 0.4)
        c = fourier_coeffs(k, 30)
        ref = []
        for ell in range(31):
            f = lambda t: psi_eval(k, t) * legendre_all(ell, t)[0][ell]
            ref.append(2 * np.pi * quad(f, 1 - 0.08, 1, epsabs=1e-14, limit=200)[0])
        assert np.abs(c.values - np.array(ref)).max() < 1e-10


def test_order_two_flatness_constant_stable():
    # |1 - psi_hat(l)| <= c (l rho)^2 with a fitted c stable across rho
    fitted = []
    for rho in (0.5, 0.25, 0.125):
        c = fourier_coeffs(make_kernel("gaussian", rho), 64).values
        ell = np.arange(1, int(1 / rho) + 1)
        fitted.append(np.max(np.abs(1 - c[ell]) / (ell * rho) ** 2))
    assert max(fitted) / min(fitted) < 1.5


def test_higher_order_flatter():
    base = fourier_coeffs(make_kernel("gaussian", 0.3), 5).values
    combo = fourier_coeffs(kernel_for_order("gaussian", 0.3, 4), 5).values
    assert np.all(np.abs(1 - combo[1:]) < np.abs(1 - base[1:]))
