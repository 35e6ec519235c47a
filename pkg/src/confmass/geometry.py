"""Model geometries, dimensional constants, and conformal-factor bookkeeping.

The model library consists of closed conformally flat manifolds with constant
scalar curvature: the round sphere, its antipodal quotient, the conformal
cylinder quotient (R^n minus the origin modulo a dilation, carrying the
r^-2-rescaled flat metric), and the flat torus.  The torus fails the
positive-scalar-curvature hypothesis and is admitted only as a testbed for
the discrete form calculus.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Union

import numpy as np


class InvalidModelError(ValueError):
    """Raised when a model description violates its invariants."""


class InadmissibleModelError(ValueError):
    """Raised when an operation requires an invertible conformal Laplacian."""


def require_scalar_dimension(n: int) -> None:
    """Scalar Green-function operations accept any dimension >= 3."""
    if not isinstance(n, (int, np.integer)) or n < 3:
        raise InvalidModelError(f"dimension must be an integer >= 3, got {n!r}")


def require_even_form_dimension(n: int) -> None:
    """Middle-degree form machinery needs an even dimension >= 4."""
    if not isinstance(n, (int, np.integer)) or n < 4 or n % 2 != 0:
        raise InvalidModelError(f"dimension must be even and >= 4, got {n!r}")


def sphere_volume(k: int) -> float:
    """Volume of the canonical unit k-sphere, 2*pi^((k+1)/2) / Gamma((k+1)/2)."""
    if not isinstance(k, (int, np.integer)) or k < 1:
        raise ValueError(f"sphere dimension must be a positive integer, got {k!r}")
    return 2.0 * math.pi ** ((k + 1) / 2.0) / math.gamma((k + 1) / 2.0)


def conformal_laplacian_coefficient(n: int) -> Fraction:
    """Exact rational coefficient 4(n-1)/(n-2) of the Laplacian term."""
    require_scalar_dimension(n)
    return Fraction(4 * (n - 1), n - 2)


# ---------------------------------------------------------------------------
# Model geometries
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RoundSphere:
    """Unit round sphere S^n."""

    n: int

    def __post_init__(self):
        require_scalar_dimension(self.n)


@dataclass(frozen=True)
class ProjectiveSpace:
    """RP^n with the round quotient metric (quotient by the antipodal map)."""

    n: int

    def __post_init__(self):
        require_scalar_dimension(self.n)


@dataclass(frozen=True)
class CylinderQuotient:
    """(R^n minus 0) / (x ~ e^L x) with metric r^-2 * flat.

    Isometric to the Riemannian product S^1(L) x S^(n-1).
    """

    n: int
    L: float

    def __post_init__(self):
        require_scalar_dimension(self.n)
        if not (self.L > 0):
            raise InvalidModelError(f"cylinder period must be positive, got {self.L!r}")


@dataclass(frozen=True)
class FlatTorus:
    """Flat torus with the given edge lengths; used by the form calculus only."""

    n: int
    periods: tuple

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise InvalidModelError(f"torus dimension must be a positive integer, got {self.n!r}")
        periods = tuple(float(p) for p in self.periods)
        if len(periods) != self.n:
            raise InvalidModelError(
                f"torus needs {self.n} periods, got {len(periods)}"
            )
        if any(p <= 0 for p in periods):
            raise InvalidModelError("torus periods must all be positive")
        object.__setattr__(self, "periods", periods)


ModelGeometry = Union[RoundSphere, ProjectiveSpace, CylinderQuotient, FlatTorus]


def scalar_curvature(model: ModelGeometry) -> float:
    """Constant scalar curvature of the model's reference metric."""
    if isinstance(model, (RoundSphere, ProjectiveSpace)):
        return float(model.n * (model.n - 1))
    if isinstance(model, CylinderQuotient):
        return float((model.n - 1) * (model.n - 2))
    if isinstance(model, FlatTorus):
        return 0.0
    raise InvalidModelError(f"unknown model {model!r}")


def check_conformal_class_admissible(model: ModelGeometry) -> bool:
    """Whether the conformal Laplacian of the model is invertible.

    Positive scalar curvature forces invertibility; on the flat torus the
    operator reduces to a pure Laplacian whose kernel contains the constants.
    """
    return scalar_curvature(model) > 0


def require_admissible(model: ModelGeometry) -> None:
    if not check_conformal_class_admissible(model):
        raise InadmissibleModelError(
            f"conformal Laplacian of {model_to_json(model)} is not invertible "
            "(constants lie in its kernel)"
        )


# ---------------------------------------------------------------------------
# JSON round-trip
# ---------------------------------------------------------------------------

_MODEL_TAGS = {
    RoundSphere: "sphere",
    ProjectiveSpace: "projective",
    CylinderQuotient: "cylinder",
    FlatTorus: "torus",
}


def model_to_json(model: ModelGeometry) -> dict:
    """Serialize a model descriptor to a plain JSON-compatible dict."""
    tag = _MODEL_TAGS.get(type(model))
    if tag is None:
        raise InvalidModelError(f"unknown model {model!r}")
    out = {"model": tag, "n": int(model.n)}
    if isinstance(model, CylinderQuotient):
        out["L"] = float(model.L)
    if isinstance(model, FlatTorus):
        out["periods"] = [float(p) for p in model.periods]
    return out


def model_from_json(obj: dict) -> ModelGeometry:
    """Parse a model descriptor; unknown keys or missing parameters are rejected."""
    if not isinstance(obj, dict):
        raise InvalidModelError(f"model descriptor must be an object, got {type(obj).__name__}")
    allowed = {"model", "n", "L", "periods"}
    unknown = set(obj) - allowed
    if unknown:
        raise InvalidModelError(f"unknown model keys: {sorted(unknown)}")
    tag = obj.get("model")
    if "n" not in obj:
        raise InvalidModelError("model descriptor needs an 'n' field")
    n = int(obj["n"])
    if tag == "sphere":
        return RoundSphere(n)
    if tag == "projective":
        return ProjectiveSpace(n)
    if tag == "cylinder":
        if "L" not in obj:
            raise InvalidModelError("cylinder descriptor needs an 'L' field")
        return CylinderQuotient(n, float(obj["L"]))
    if tag == "torus":
        if "periods" not in obj:
            raise InvalidModelError("torus descriptor needs a 'periods' field")
        return FlatTorus(n, tuple(obj["periods"]))
    raise InvalidModelError(f"unknown model tag {tag!r}")


# ---------------------------------------------------------------------------
# Sphere charts
# ---------------------------------------------------------------------------
#
# The sphere is covered by the two stereographic charts that project from the
# north and from the south pole.  The general-pole projection sends the sphere
# minus the pole q onto the hyperplane orthogonal to q through the origin; the
# antipode -q lands at the chart origin.


def stereo_project(x: np.ndarray, pole: np.ndarray) -> np.ndarray:
    """Stereographic chart image of x in S^n from the pole q (x != q)."""
    x = np.asarray(x, dtype=float)
    pole = np.asarray(pole, dtype=float)
    dot = x @ pole
    if np.any(np.isclose(dot, 1.0)):
        raise ValueError("stereographic projection is singular at its pole; switch charts")
    return (x - np.multiply.outer(dot, pole)) / (1.0 - dot) if x.ndim > 1 else (x - dot * pole) / (1.0 - dot)


def stereo_unproject(X: np.ndarray, pole: np.ndarray) -> np.ndarray:
    """Inverse stereographic chart: chart point X (orthogonal to q) back to S^n."""
    X = np.asarray(X, dtype=float)
    pole = np.asarray(pole, dtype=float)
    s2 = np.sum(X * X, axis=-1)
    denom = 1.0 + s2
    return (2.0 * X + np.multiply.outer(s2 - 1.0, pole)) / denom[..., None] if X.ndim > 1 else (
        2.0 * X + (s2 - 1.0) * pole
    ) / denom


def stereo_conformal_factor(chart_radius, n: int):
    """Conformal weight u0 with round = u0^(4/(n-2)) * flat in a stereographic chart.

    u0(X) = (2 / (1+|X|^2))^((n-2)/2); the full round metric in the chart is
    (2/(1+|X|^2))^2 times the Euclidean one.
    """
    s = np.asarray(chart_radius, dtype=float)
    return (2.0 / (1.0 + s * s)) ** ((n - 2) / 2.0)


@dataclass
class BasePoint:
    """A marked point in a chart of a model geometry.

    For quotient models the coordinates are a fundamental-domain
    representative (sign-normalized unit vector for the projective space,
    chart vector with log-radius in [-L/2, L/2) for the cylinder).
    """

    chart: str
    coords: np.ndarray

    def __post_init__(self):
        self.coords = np.asarray(self.coords, dtype=float)


def sphere_base_point(n: int, direction: np.ndarray | None = None) -> BasePoint:
    """Embedded base point on S^n (defaults to the south pole)."""
    if direction is None:
        direction = np.zeros(n + 1)
        direction[-1] = -1.0
    direction = np.asarray(direction, dtype=float)
    direction = direction / np.linalg.norm(direction)
    return BasePoint(chart="embedded", coords=direction)


def projective_base_point(n: int, direction: np.ndarray | None = None) -> BasePoint:
    """Fundamental-domain representative of a point of RP^n."""
    bp = sphere_base_point(n, direction)
    v = bp.coords
    idx = np.argmax(np.abs(v) > 1e-12)
    if v[idx] < 0:
        v = -v
    return BasePoint(chart="embedded", coords=v)


def cylinder_base_point(n: int, direction: np.ndarray | None = None) -> BasePoint:
    """Chart representative of a cylinder point, normalized to |x| = 1."""
    if direction is None:
        direction = np.zeros(n)
        direction[0] = 1.0
    direction = np.asarray(direction, dtype=float)
    r = np.linalg.norm(direction)
    if r == 0:
        raise InvalidModelError("cylinder chart excludes the origin")
    return BasePoint(chart="punctured", coords=direction / r)


# ---------------------------------------------------------------------------
# Conformal factors
# ---------------------------------------------------------------------------


@dataclass
class ConformalFactor:
    """A smooth positive function u describing the metric u^(4/(n-2)) * g.

    ``flat_near_base`` declares that the rescaled metric is Euclidean-flat on
    the ball of radius ``flat_radius`` around the marked point, which is the
    gauge in which mass constants are read off.
    """

    fn: Callable[[np.ndarray], np.ndarray]
    flat_near_base: bool = False
    flat_radius: float = 0.0
    description: str = ""

    def __call__(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(self.fn(np.asarray(points, dtype=float)), dtype=float)

    def validate_positive(self, samples: np.ndarray) -> None:
        vals = self(samples)
        if np.any(vals <= 0):
            bad = np.asarray(samples)[np.argmin(vals)]
            raise ValueError(f"conformal factor must be positive; failed at {bad}")


def unit_factor() -> ConformalFactor:
    return ConformalFactor(fn=lambda pts: np.ones(np.asarray(pts).shape[:-1]),
                           flat_near_base=False, description="identity")
