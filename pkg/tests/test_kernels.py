import math

import numpy as np
import pytest

from confmass.geometry import (
    ConformalFactor,
    CylinderQuotient,
    FlatTorus,
    InadmissibleModelError,
    ProjectiveSpace,
    RoundSphere,
    conformal_laplacian_coefficient,
    projective_base_point,
    sphere_base_point,
    sphere_volume,
)
from confmass.kernels import (
    closed_form_mass,
    conformal_covariance_transform,
    cylinder_flat_gauge_green,
    cylinder_green,
    cylinder_mass,
    extract_mass,
    extraction_radii,
    flat_gauge_expansion,
    flat_kernel,
    flat_kernel_flux,
    flat_kernel_radial_derivative,
    projective_flat_gauge_green,
    projective_green,
    projective_mass,
    sphere_flat_gauge_green,
    sphere_green,
)
from confmass.numerics import ExtrapolationError, sphere_surface_quadrature


# -- flat kernel -------------------------------------------------------------


def test_flat_kernel_values():
    assert flat_kernel(4, 1.0) == pytest.approx(1.0 / (24 * math.pi**2), rel=1e-15)
    assert flat_kernel(4, 2.0) == pytest.approx(1.0 / (96 * math.pi**2), rel=1e-15)


def test_flat_kernel_rejects_bad_arguments():
    with pytest.raises(ValueError):
        flat_kernel(4, 0.0)
    with pytest.raises(ValueError):
        flat_kernel(4, -1.0)
    with pytest.raises(ValueError):
        flat_kernel(2, 1.0)


def test_flat_kernel_divergence_normalization():
    for r in (0.25, 0.5):
        assert flat_kernel_flux(4, r) == pytest.approx(1.0, abs=1e-8)
    assert flat_kernel_flux(6, 0.5) == pytest.approx(1.0, abs=1e-8)


# -- sphere ------------------------------------------------------------------


def test_sphere_green_symmetry():
    rng = np.random.default_rng(3)
    for _ in range(20):
        a, b = rng.standard_normal((2, 5))
        a /= np.linalg.norm(a)
        b /= np.linalg.norm(b)
        assert sphere_green(4, a, b).value == pytest.approx(
            sphere_green(4, b, a).value, abs=1e-12
        )


def test_sphere_green_positive_and_singular():
    P = sphere_base_point(4).coords
    rng = np.random.default_rng(5)
    for _ in range(30):
        x = rng.standard_normal(5)
        x /= np.linalg.norm(x)
        assert sphere_green(4, P, x).value > 0
    with pytest.raises(ValueError):
        sphere_green(4, P, P)


def test_sphere_flat_gauge_is_exact_flat_kernel():
    # after the stereographic flattening the kernel is the flat one: the
    # rigidity case has zero mass and a vanishing regular part
    P = sphere_base_point(4)
    rng = np.random.default_rng(0)
    pts = rng.standard_normal((40, 4)) * 0.4
    vals = sphere_flat_gauge_green(4, P, pts)
    s = np.linalg.norm(pts, axis=-1)
    assert np.max(np.abs(vals - flat_kernel(4, s))) < 1e-15


def test_sphere_mass_is_zero():
    expansion = flat_gauge_expansion(RoundSphere(4))
    assert abs(expansion.mass) < 1e-8
    assert expansion.leading_normalization == pytest.approx(
        1.0 / (12 * sphere_volume(3)), rel=1e-15
    )


def test_sphere_green_flux_normalization():
    # flux of c_n grad of the gauge kernel through small spheres tends to 1
    P = sphere_base_point(4)
    dirs, w = sphere_surface_quadrature(3, 10)
    c_n = float(conformal_laplacian_coefficient(4))
    r, h = 1e-2, 1e-5
    up = sphere_flat_gauge_green(4, P, (r + h) * dirs)
    dn = sphere_flat_gauge_green(4, P, (r - h) * dirs)
    flux = float(np.sum(w * r**3 * c_n * (-(up - dn) / (2 * h))))
    assert flux == pytest.approx(1.0, abs=1e-3)


# -- projective quotient -----------------------------------------------------


def test_projective_green_is_two_sheeted_sum():
    rng = np.random.default_rng(11)
    P = rng.standard_normal(5)
    P /= np.linalg.norm(P)
    x = rng.standard_normal(5)
    x /= np.linalg.norm(x)
    val = projective_green(4, P, x).value
    assert val == pytest.approx(
        sphere_green(4, P, x).value + sphere_green(4, -P, x).value, rel=1e-15
    )
    # well defined on the quotient: the same value from the other lift
    assert val == pytest.approx(projective_green(4, -P, x).value, rel=1e-15)


def test_projective_mass_closed_form():
    assert projective_mass(4) == pytest.approx(1.0 / (12 * sphere_volume(3)), rel=1e-15)
    assert projective_mass(4) > 0
    assert projective_mass(6) > 0


def test_projective_regular_part_is_constant():
    P = projective_base_point(4)
    rng = np.random.default_rng(1)
    pts = rng.standard_normal((30, 4)) * 0.3
    s = np.linalg.norm(pts, axis=-1)
    reg = projective_flat_gauge_green(4, P, pts) - flat_kernel(4, s)
    assert np.max(np.abs(reg - projective_mass(4))) < 1e-14


def test_projective_mass_extraction_matches_closed_form():
    expansion = flat_gauge_expansion(ProjectiveSpace(4))
    assert expansion.mass == pytest.approx(projective_mass(4), abs=1e-6)


def test_projective_mass_independent_of_base_point():
    rng = np.random.default_rng(9)
    radii = extraction_radii(0.25)
    masses = []
    for _ in range(2):
        direction = rng.standard_normal(5)
        P = projective_base_point(4, direction)
        samples = []
        for r in radii:
            pts = np.zeros((1, 4))
            pts[0, 0] = r
            val = projective_flat_gauge_green(4, P, pts)[0] - flat_kernel(4, r)
            samples.append((r, val))
        masses.append(extract_mass(samples)[0])
    assert masses[0] == pytest.approx(masses[1], abs=1e-12)


# -- cylinder quotient -------------------------------------------------------


def test_cylinder_green_symmetry_and_positivity():
    rng = np.random.default_rng(2)
    L = 1.5
    for _ in range(10):
        P = rng.standard_normal(4)
        P /= np.linalg.norm(P)
        x = rng.standard_normal(4)
        x /= np.linalg.norm(x) / rng.uniform(0.8, 1.2)
        gp = cylinder_green(4, L, P, x)
        gx = cylinder_green(4, L, x, P)
        assert gp.value > 0
        assert gp.value == pytest.approx(gx.value, rel=1e-12)
        assert gp.method == "image-sum"


def test_cylinder_image_sum_deck_invariance():
    # the image sum descends to the quotient: deck-translating either
    # argument reproduces the same value
    L = 1.0
    P = np.array([1.0, 0, 0, 0])
    x = np.array([0.6, 0.7, 0.1, -0.2])
    v1 = cylinder_green(4, L, P, x).value
    assert cylinder_green(4, L, P, math.exp(L) * x).value == pytest.approx(v1, rel=1e-12)
    assert cylinder_green(4, L, math.exp(-L) * P, x).value == pytest.approx(v1, rel=1e-12)


def test_cylinder_singular_part_is_flat_kernel():
    # at tiny radius the k = 0 image dominates: the gauge kernel approaches
    # the flat one in relative terms
    P = np.array([1.0, 0, 0, 0])
    for r in (1e-3, 1e-4):
        x = P + np.array([0, r, 0, 0])
        val = cylinder_flat_gauge_green(4, 2.0, P, x[None, :])[0]
        assert val / flat_kernel(4, r) == pytest.approx(1.0, abs=1e-4)


def test_cylinder_mass_positive_for_spec_periods():
    for L in (0.5, 1.0, 2.0, 4.0):
        assert cylinder_mass(4, L) > 0


def test_cylinder_mass_closed_form_vs_pairwise_sum():
    # A = sum over k of (2 sinh(kL/2))^(2-n) / (2(n-1) omega_{n-1})
    L, n = 2.0, 4
    direct = sum((2.0 * math.sinh(0.5 * k * L)) ** (2 - n) for k in range(1, 60))
    direct /= 2.0 * (n - 1) * sphere_volume(n - 1)
    assert cylinder_mass(n, L) == pytest.approx(direct, rel=1e-14)


def test_cylinder_extraction_matches_closed_form():
    for L in (0.5, 2.0):
        expansion = flat_gauge_expansion(CylinderQuotient(4, L))
        assert expansion.mass == pytest.approx(cylinder_mass(4, L), abs=1e-6)


# -- covariance transform ----------------------------------------------------


def _sample_factor():
    def fn(points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return 1.0 + 0.3 * np.sum(pts**4, axis=-1)

    return ConformalFactor(fn=fn, description="quartic bump")


def test_covariance_identity_factor():
    P = sphere_base_point(4).coords
    x = np.array([1.0, 0, 0, 0, 0])
    ke = sphere_green(4, P, x)
    unit = ConformalFactor(fn=lambda pts: np.ones(np.atleast_2d(pts).shape[0]))
    assert conformal_covariance_transform(ke, unit).value == ke.value


def test_covariance_double_transform_is_identity():
    P = sphere_base_point(4).coords
    x = np.array([0.0, 1.0, 0, 0, 0])
    ke = sphere_green(4, P, x)
    u = _sample_factor()
    u_inv = ConformalFactor(fn=lambda pts: 1.0 / u.fn(pts))
    back = conformal_covariance_transform(conformal_covariance_transform(ke, u), u_inv)
    assert back.value == pytest.approx(ke.value, rel=1e-12)


def test_covariance_reproduces_flat_kernel_in_chart():
    # transforming the sphere kernel by the stereographic factor recovers the
    # flat kernel in chart coordinates
    from confmass.geometry import stereo_conformal_factor, stereo_unproject
    from confmass.kernels import KernelEvaluation, _orthobasis

    n = 4
    P = sphere_base_point(n).coords
    basis = _orthobasis(-P)
    rng = np.random.default_rng(4)
    X = rng.standard_normal(4) * 0.5
    x = stereo_unproject(X @ basis.T, -P)
    ke = sphere_green(n, P, x)

    def gauge(points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        # evaluate the flattening factor 1/u0 from the ambient position
        from confmass.geometry import stereo_project

        chart = np.array([stereo_project(p / np.linalg.norm(p), -P) for p in pts])
        s = np.linalg.norm(chart, axis=-1)
        return 1.0 / stereo_conformal_factor(s, n)

    transformed = conformal_covariance_transform(ke, ConformalFactor(fn=gauge))
    assert transformed.value == pytest.approx(
        float(flat_kernel(n, np.linalg.norm(X))), rel=1e-12
    )


# -- mass extraction ---------------------------------------------------------


def test_extract_mass_exact_on_linear_remainder():
    radii = extraction_radii(0.25)
    samples = [(r, 0.7 + 0.3 * r) for r in radii]
    mass, spread = extract_mass(samples)
    assert mass == pytest.approx(0.7, abs=1e-14)
    assert spread < 1e-14


def test_extract_mass_requires_geometric_radii():
    with pytest.raises(ValueError):
        extract_mass([(0.1, 1.0), (0.07, 1.0), (0.02, 1.0)])


def test_extract_mass_raises_on_noise():
    rng = np.random.default_rng(8)
    radii = extraction_radii(0.25)
    samples = [(r, float(rng.standard_normal())) for r in radii]
    with pytest.raises(ExtrapolationError):
        extract_mass(samples, tol=1e-10)


def test_gauge_rescaling_preserves_mass_sign():
    # re-extracting in a constant-rescaled flat gauge divides the mass by the
    # square of the scale but never flips its sign
    kappa = 1.3
    n = 4
    chart_scale = kappa ** (2.0 / (n - 2))
    P = projective_base_point(n)
    radii = extraction_radii(0.25)
    samples, scaled = [], []
    for r in radii:
        pts = np.zeros((1, n))
        pts[0, 0] = r
        reg = projective_flat_gauge_green(n, P, pts)[0] - flat_kernel(n, r)
        samples.append((r, reg))
        scaled.append((chart_scale * r, reg / kappa**2))
    base_mass, _ = extract_mass(samples)
    scaled_mass, _ = extract_mass(scaled)
    assert scaled_mass == pytest.approx(base_mass / kappa**2, rel=1e-10)
    assert math.copysign(1, scaled_mass) == math.copysign(1, base_mass)


def test_flat_gauge_expansion_refuses_torus():
    with pytest.raises(InadmissibleModelError):
        flat_gauge_expansion(FlatTorus(4, (1, 1, 1, 1)))


def test_closed_form_mass_dispatch():
    assert closed_form_mass(RoundSphere(4)) == 0.0
    assert closed_form_mass(ProjectiveSpace(4)) == projective_mass(4)
    assert closed_form_mass(CylinderQuotient(4, 2.0)) == cylinder_mass(4, 2.0)
