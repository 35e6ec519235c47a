import math

import numpy as np
import pytest

from confmass.geometry import (
    CylinderQuotient,
    FlatTorus,
    InvalidModelError,
    ProjectiveSpace,
    RoundSphere,
    check_conformal_class_admissible,
    conformal_laplacian_coefficient,
    model_from_json,
    model_to_json,
    scalar_curvature,
    sphere_volume,
    stereo_conformal_factor,
    stereo_project,
    stereo_unproject,
)


def test_sphere_volume_values():
    assert sphere_volume(1) == pytest.approx(2 * math.pi, rel=1e-15)
    assert sphere_volume(2) == pytest.approx(4 * math.pi, rel=1e-15)
    assert sphere_volume(3) == pytest.approx(2 * math.pi**2, rel=1e-15)


def test_sphere_volume_recursion():
    # omega_k = 2 pi omega_(k-2) / (k-1)
    for k in range(3, 13):
        assert sphere_volume(k) == pytest.approx(
            2 * math.pi * sphere_volume(k - 2) / (k - 1), rel=1e-14
        )


def test_sphere_volume_monte_carlo_oracle():
    # omega_3 = 4 * vol(B^4); estimate the ball volume by rejection sampling
    rng = np.random.default_rng(42)
    n_samples = 400_000
    pts = rng.uniform(-1.0, 1.0, size=(n_samples, 4))
    frac = np.mean(np.sum(pts * pts, axis=1) <= 1.0)
    estimate = 4.0 * 16.0 * frac
    sigma = 4.0 * 16.0 * math.sqrt(frac * (1 - frac) / n_samples)
    assert abs(estimate - sphere_volume(3)) < 5 * sigma


def test_sphere_volume_rejects_degenerate():
    with pytest.raises(ValueError):
        sphere_volume(0)


def test_conformal_laplacian_coefficient():
    assert conformal_laplacian_coefficient(4) == 6
    assert conformal_laplacian_coefficient(6) == 5
    assert conformal_laplacian_coefficient(3) == 8


def test_scalar_curvature_values():
    assert scalar_curvature(RoundSphere(4)) == 12
    assert scalar_curvature(CylinderQuotient(4, 1.0)) == 6
    assert scalar_curvature(FlatTorus(4, (1, 1, 1, 1))) == 0
    assert scalar_curvature(ProjectiveSpace(6)) == 30


def _fd_laplacian(f, x, h=1e-3):
    """Geometer's flat Laplacian -sum of second differences."""
    n = len(x)
    acc = 0.0
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        acc += (f(x + e) - 2.0 * f(x) + f(x - e)) / h**2
    return -acc


def test_sphere_curvature_via_stereographic_chart():
    # scal of u^(4/(n-2)) * flat is c_n * u^(-(n+2)/(n-2)) * (flat Laplacian of u)
    n = 4
    c_n = float(conformal_laplacian_coefficient(n))

    def u(x):
        return float(stereo_conformal_factor(np.linalg.norm(x), n))

    x = np.array([0.3, -0.2, 0.1, 0.4])
    scal = c_n * u(x) ** (-(n + 2) / (n - 2)) * _fd_laplacian(u, x)
    assert scal == pytest.approx(scalar_curvature(RoundSphere(n)), abs=1e-3)


def test_cylinder_curvature_via_conformal_factor():
    n = 4
    c_n = float(conformal_laplacian_coefficient(n))

    def u(x):
        return float(np.linalg.norm(x) ** (-(n - 2) / 2))

    x = np.array([0.8, 0.5, -0.3, 0.2])
    scal = c_n * u(x) ** (-(n + 2) / (n - 2)) * _fd_laplacian(u, x)
    assert scal == pytest.approx(scalar_curvature(CylinderQuotient(n, 1.0)), abs=1e-3)


def test_admissibility_matches_curvature_sign():
    models = [
        RoundSphere(4),
        RoundSphere(6),
        ProjectiveSpace(4),
        CylinderQuotient(4, 0.5),
        CylinderQuotient(6, 2.0),
        FlatTorus(4, (1, 2, 1, 1)),
    ]
    for m in models:
        assert check_conformal_class_admissible(m) == (scalar_curvature(m) > 0)


def test_model_validation():
    with pytest.raises(InvalidModelError):
        CylinderQuotient(4, 0.0)
    with pytest.raises(InvalidModelError):
        FlatTorus(4, (1.0, 1.0, -1.0, 1.0))
    with pytest.raises(InvalidModelError):
        FlatTorus(4, (1.0, 1.0))
    with pytest.raises(InvalidModelError):
        RoundSphere(2)


def test_json_round_trip():
    models = [
        RoundSphere(4),
        ProjectiveSpace(6),
        CylinderQuotient(4, 2.5),
        FlatTorus(4, (1.0, 2.0, 0.5, 1.0)),
    ]
    for m in models:
        assert model_from_json(model_to_json(m)) == m


def test_json_rejects_unknown_keys():
    with pytest.raises(InvalidModelError):
        model_from_json({"model": "sphere", "n": 4, "radius": 2})
    with pytest.raises(InvalidModelError):
        model_from_json({"model": "moebius", "n": 4})
    with pytest.raises(InvalidModelError):
        model_from_json({"model": "cylinder", "n": 4})


def test_stereographic_round_trip():
    rng = np.random.default_rng(7)
    pole = rng.standard_normal(5)
    pole /= np.linalg.norm(pole)
    for _ in range(10):
        x = rng.standard_normal(5)
        x /= np.linalg.norm(x)
        X = stereo_project(x, pole)
        assert abs(X @ pole) < 1e-12  # chart plane is orthogonal to the pole
        back = stereo_unproject(X, pole)
        assert np.allclose(back, x, atol=1e-12)


def test_stereographic_rejects_pole():
    pole = np.array([0.0, 0.0, 0.0, 0.0, 1.0])
    with pytest.raises(ValueError):
        stereo_project(pole, pole)
