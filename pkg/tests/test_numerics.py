import math

import numpy as np
import pytest

from confmass.numerics import (
    ExtrapolationError,
    RadialCutoff,
    SmoothRamp,
    gauss_legendre,
    harmonic_multiplicity,
    neumaier_sum,
    richardson_limit,
    sphere_surface_quadrature,
    zonal_values,
)


def test_neumaier_recovers_cancellation():
    terms = [1e16, 1.0, -1e16]
    assert neumaier_sum(terms) == 1.0


def test_richardson_is_exact_on_linear_data():
    radii = [0.1 * 2.0 ** (-i) for i in range(5)]
    values = [3.5 + 0.3 * r for r in radii]
    limit, spread = richardson_limit(values)
    assert limit == pytest.approx(3.5, abs=1e-14)
    assert spread < 1e-14


def test_richardson_kills_quadratic_term():
    radii = [0.1 * 2.0 ** (-i) for i in range(6)]
    values = [1.0 - 2.0 * r + 5.0 * r**2 + 0.7 * r**3 for r in radii]
    limit, _ = richardson_limit(values)
    # the r^3 tail survives the (1, 2) elimination, suppressed by ~1/8
    assert limit == pytest.approx(1.0, abs=1e-6)
    assert abs(limit - 1.0) < 0.7 * radii[3] ** 3


def test_richardson_reports_nonconvergence():
    rng = np.random.default_rng(0)
    values = list(rng.standard_normal(6))
    with pytest.raises(ExtrapolationError) as err:
        richardson_limit(values, tol=1e-12)
    assert "tableau" in err.value.diagnostics


def test_gauss_legendre_integrates_polynomials():
    x, w = gauss_legendre(0.0, 2.0, 8)
    assert np.dot(w, x**7) == pytest.approx(2.0**8 / 8, rel=1e-13)


def test_sphere_quadrature_total_measure():
    from confmass.geometry import sphere_volume

    for d in (1, 2, 3):
        pts, w = sphere_surface_quadrature(d, level=16)
        assert np.allclose(np.linalg.norm(pts, axis=1), 1.0)
        assert np.sum(w) == pytest.approx(sphere_volume(d), rel=1e-12)


def test_sphere_quadrature_integrates_coordinate_moments():
    pts, w = sphere_surface_quadrature(3, level=16)
    # odd moments vanish; x_i^2 integrates to omega_3 / 4
    assert abs(np.sum(w * pts[:, 0])) < 1e-12
    assert np.sum(w * pts[:, 1] ** 2) == pytest.approx(
        2 * math.pi**2 / 4.0, rel=1e-10
    )


def test_smoothramp_endpoints_and_contact():
    for order in (2, 5, 9):
        ramp = SmoothRamp(order)
        assert ramp.value(0.0) == pytest.approx(0.0, abs=1e-15)
        assert ramp.value(1.0) == pytest.approx(1.0, abs=1e-13)
        for t in (1e-4, 1 - 1e-4):
            assert abs(ramp.deriv(t)) < 1e-3
        # numerical derivative agrees with the closed form
        h = 1e-6
        t = 0.37
        fd = (ramp.value(t + h) - ramp.value(t - h)) / (2 * h)
        assert fd == pytest.approx(ramp.deriv(t), rel=1e-8)
        fd2 = (ramp.deriv(t + h) - ramp.deriv(t - h)) / (2 * h)
        assert fd2 == pytest.approx(float(ramp.deriv2(np.array(t))), rel=1e-6)


def test_radial_cutoff_plateaus():
    cut = RadialCutoff(0.25, 0.5, order=7)
    r = np.array([0.1, 0.25, 0.375, 0.5, 0.7])
    vals = cut.value(r)
    assert vals[0] == 1.0 and vals[1] == 1.0
    assert 0.0 < vals[2] < 1.0
    assert vals[3] == 0.0 and vals[4] == 0.0


def test_harmonic_multiplicities():
    # S^4: 1, 5, 14, 30, ...; S^3: (l+1)^2
    assert [harmonic_multiplicity(4, l) for l in range(4)] == [1, 5, 14, 30]
    assert [harmonic_multiplicity(3, l) for l in range(5)] == [1, 4, 9, 16, 25]


def test_zonal_values_match_legendre_on_s2():
    # on S^2 the zonal polynomials are the Legendre polynomials
    t = np.linspace(-1, 1, 9)
    vals = zonal_values(2, 4, t)
    legendre = np.polynomial.legendre.legvander(t, 4).T
    assert np.allclose(vals, legendre, atol=1e-12)


def test_zonal_values_normalization_and_orthogonality():
    theta, w = gauss_legendre(0.0, math.pi, 200)
    vals = zonal_values(4, 12, np.cos(theta))
    assert np.allclose(zonal_values(4, 12, np.array([1.0])), 1.0)
    meas = np.sin(theta) ** 3 * w
    gram = vals @ (meas[:, None] * vals.T)
    off = gram - np.diag(np.diag(gram))
    assert np.max(np.abs(off)) < 1e-12
