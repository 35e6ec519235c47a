"""Closed-form and image-sum Green functions of the conformal Laplacian on the
model geometries, conformal-covariance transforms, and mass extraction.

All masses are reported in a conformal gauge that is Euclidean-flat on a ball
around the base point; the constant term of the Green expansion is only
meaningful there.  For the sphere and its antipodal quotient the flattening
chart is the stereographic projection from the antipode of the base point; for
the cylinder quotient it is the punctured-space chart itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import (
    BasePoint,
    ConformalFactor,
    CylinderQuotient,
    InvalidModelError,
    ModelGeometry,
    ProjectiveSpace,
    RoundSphere,
    conformal_laplacian_coefficient,
    cylinder_base_point,
    require_admissible,
    sphere_base_point,
    projective_base_point,
    sphere_volume,
    stereo_conformal_factor,
    stereo_project,
    stereo_unproject,
)
from .numerics import (
    ExtrapolationError,
    neumaier_sum,
    richardson_limit,
    sphere_surface_quadrature,
)


def flat_kernel(n: int, r) -> np.ndarray:
    """Fundamental solution of the flat conformal Laplacian at distance r.

    r^(2-n) / (4 (n-1) omega_(n-1)); applying c_n * Laplacian to it yields the
    unit point mass at the origin, which the divergence-theorem quadrature
    check pins down.
    """
    if n < 3:
        raise ValueError("flat kernel needs dimension >= 3")
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("flat kernel is only defined for positive radii")
    return r ** (2 - n) / (4.0 * (n - 1) * sphere_volume(n - 1))


def flat_kernel_radial_derivative(n: int, r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    return (2 - n) * r ** (1 - n) / (4.0 * (n - 1) * sphere_volume(n - 1))


def flat_kernel_flux(n: int, r: float, level: int = 24) -> float:
    """Surface quadrature of c_n |d/dr flat_kernel| over the sphere of radius r."""
    dirs, w = sphere_surface_quadrature(n - 1, level)
    c_n = float(conformal_laplacian_coefficient(n))
    integrand = c_n * np.abs(flat_kernel_radial_derivative(n, r)) * np.ones(len(dirs))
    return float(np.sum(w * r ** (n - 1) * integrand))


@dataclass
class KernelEvaluation:
    """A Green-function value together with how it was computed."""

    source: np.ndarray
    target: np.ndarray
    value: float
    method: str


@dataclass
class GreenExpansion:
    """Decomposition of a Green function near the base point, in a flat gauge."""

    n: int
    mass: float
    leading_normalization: float
    regular_samples: list
    gauge: str
    error_estimate: float = 0.0


def _embed(point) -> np.ndarray:
    if isinstance(point, BasePoint):
        return np.asarray(point.coords, dtype=float)
    return np.asarray(point, dtype=float)


def _orthobasis(v: np.ndarray) -> np.ndarray:
    """Deterministic orthonormal basis of the hyperplane orthogonal to v.

    Columns are the basis vectors; used to identify chart coordinates with a
    concrete plane in the ambient space.
    """
    v = v / np.linalg.norm(v)
    dim = v.size
    mat = np.eye(dim) - np.outer(v, v)
    q, r = np.linalg.qr(mat)
    cols = [q[:, i] for i in range(dim) if abs(r[i, i]) > 1e-8]
    basis = np.stack(cols[: dim - 1], axis=1)
    # fix signs for reproducibility
    for i in range(basis.shape[1]):
        j = np.argmax(np.abs(basis[:, i]))
        if basis[j, i] < 0:
            basis[:, i] = -basis[:, i]
    return basis


# ---------------------------------------------------------------------------
# Round sphere
# ---------------------------------------------------------------------------


def sphere_green(n: int, P, x) -> KernelEvaluation:
    """Green function of the conformal Laplacian on the round S^n.

    Computed by pulling the flat kernel back through a stereographic chart;
    the chart distance collapses to the chordal distance in the ambient space,
    so the value is flat_kernel(n, |x - P|) with the ambient chord length.
    """
    P = _embed(P)
    x = _embed(x)
    chord = np.linalg.norm(x - P, axis=-1)
    if np.any(chord <= 0):
        raise ValueError("Green function is singular at the source point")
    return KernelEvaluation(source=P, target=x, value=float(flat_kernel(n, chord)),
                            method="closed-form")


def sphere_flat_gauge_factor(n: int, P) -> ConformalFactor:
    """Conformal factor flattening the round metric in the chart antipodal to P.

    In the stereographic chart projecting from -P the round metric equals
    u0^(4/(n-2)) times the flat one; dividing by u0 therefore flattens the
    whole chart, and in particular a ball around P.
    """
    P = _embed(P)

    def factor(points):
        pts = np.asarray(points, dtype=float)
        s = np.linalg.norm(pts, axis=-1)
        return 1.0 / stereo_conformal_factor(s, n)

    return ConformalFactor(fn=factor, flat_near_base=True, flat_radius=1.0,
                           description="stereographic flattening at the base point")


def sphere_flat_gauge_green(n: int, P, chart_points: np.ndarray) -> np.ndarray:
    """Green values in the flat gauge, at stereographic chart points around P."""
    P = _embed(P)
    basis = _orthobasis(-P)
    pts = np.atleast_2d(np.asarray(chart_points, dtype=float))
    ambient = stereo_unproject(pts @ basis.T, -P)
    s_tgt = np.linalg.norm(pts, axis=-1)
    # gauge factor is v = 1/u0, so the transformed kernel gains u0(P) u0(x)
    u_src = stereo_conformal_factor(0.0, n)
    u_tgt = stereo_conformal_factor(s_tgt, n)
    chord = np.linalg.norm(ambient - P, axis=-1)
    return flat_kernel(n, chord) * u_src * u_tgt


# ---------------------------------------------------------------------------
# Projective space
# ---------------------------------------------------------------------------


def projective_green(n: int, P, x) -> KernelEvaluation:
    """Green function on RP^n, as the two-sheeted lift from the sphere.

    The pullback under the covering projection solves the equation with point
    masses at both lifts, so the value at a representative pair is the sum of
    the sphere kernels at P and -P.
    """
    P = _embed(P)
    x = _embed(x)
    val = sphere_green(n, P, x).value + sphere_green(n, -P, x).value
    return KernelEvaluation(source=P, target=x, value=val, method="closed-form")


def projective_mass(n: int) -> float:
    """Mass constant of RP^n in the gauge flat near the base point.

    The summand sourced at the antipodal lift becomes exactly constant after
    the flattening transform, and its value is flat_kernel(n, 1):

        A = 1 / (4 (n-1) omega_(n-1)).
    """
    if n < 4 or n % 2:
        raise InvalidModelError("projective quotient mass needs even dimension >= 4")
    return 1.0 / (4.0 * (n - 1) * sphere_volume(n - 1))


def projective_flat_gauge_green(n: int, P, chart_points: np.ndarray) -> np.ndarray:
    """Flat-gauge Green values on RP^n at chart points around the base point."""
    P = _embed(P)
    basis = _orthobasis(-P)
    pts = np.atleast_2d(np.asarray(chart_points, dtype=float))
    ambient = stereo_unproject(pts @ basis.T, -P)
    s_tgt = np.linalg.norm(pts, axis=-1)
    u_src = stereo_conformal_factor(0.0, n)
    u_tgt = stereo_conformal_factor(s_tgt, n)
    chord_p = np.linalg.norm(ambient - P, axis=-1)
    chord_m = np.linalg.norm(ambient + P, axis=-1)
    lifted = flat_kernel(n, chord_p) + flat_kernel(n, chord_m)
    return lifted * u_src * u_tgt


# ---------------------------------------------------------------------------
# Cylinder quotient
# ---------------------------------------------------------------------------


def _cylinder_image_sum(n: int, L: float, weight, tol: float = 1e-14,
                        k_cap: int = 400):
    """Deterministic image sum over deck translates k = 0, +1, -1, +2, ...

    ``weight(k)`` is the k-th image summand.  The geometric tail (ratio
    e^(-(n-2)L/2) per step) must drop below ``tol`` times the running sum
    before the sum is accepted.
    """
    ratio = math.exp(-0.5 * (n - 2) * L)
    terms = []
    k = 0
    while True:
        if k == 0:
            terms.append(weight(0))
            level = abs(terms[-1])
        else:
            t_plus = weight(k)
            t_minus = weight(-k)
            terms.extend([t_plus, t_minus])
            level = abs(t_plus) + abs(t_minus)
        partial = neumaier_sum(terms)
        tail_bound = level * ratio / (1.0 - ratio)
        if k > 0 and tail_bound <= tol * max(abs(partial), 1e-300):
            return partial, tail_bound
        if k >= k_cap:
            raise RuntimeError(
                f"image sum failed to meet the tail tolerance after {k_cap} levels "
                f"(bound {tail_bound:.3e})"
            )
        k += 1


def cylinder_green(n: int, L: float, P, x, tol: float = 1e-14) -> KernelEvaluation:
    """Green function of the cylinder quotient metric r^-2 * flat.

    Image sum of conformally weighted flat kernels over the deck group
    x -> e^(kL) x, with weights u = |.|^(-(n-2)/2) relating the quotient
    metric to the flat chart metric.
    """
    if n < 4 or n % 2:
        raise InvalidModelError("cylinder quotient needs even dimension >= 4")
    if L <= 0:
        raise InvalidModelError("cylinder period must be positive")
    P = _embed(P)
    x = _embed(x)
    rp = np.linalg.norm(P)
    rx = np.linalg.norm(x)

    def term(k: int) -> float:
        scale = math.exp(k * L)
        img = scale * P
        dist = np.linalg.norm(x - img)
        if dist <= 0:
            raise ValueError("Green function is singular at the source orbit")
        return (rp * scale * rx) ** ((n - 2) / 2.0) * float(flat_kernel(n, dist))

    value, bound = _cylinder_image_sum(n, L, term, tol=tol)
    return KernelEvaluation(source=P, target=x, value=value, method="image-sum")


def cylinder_flat_gauge_green(n: int, L: float, P, chart_points: np.ndarray,
                              tol: float = 1e-14) -> np.ndarray:
    """Flat-gauge Green values at chart points (P normalized to |P| = 1)."""
    P = _embed(P)
    P = P / np.linalg.norm(P)
    pts = np.atleast_2d(np.asarray(chart_points, dtype=float))
    out = np.empty(len(pts))
    for i, x in enumerate(pts):
        def term(k: int) -> float:
            scale = math.exp(k * L)
            dist = np.linalg.norm(x - scale * P)
            return math.exp(0.5 * k * L * (n - 2)) * float(flat_kernel(n, dist))

        out[i], _ = _cylinder_image_sum(n, L, term, tol=tol)
    return out


def cylinder_mass(n: int, L: float, tol: float = 1e-14) -> float:
    """Mass of the cylinder quotient in the flat chart gauge at |P| = 1.

    Evaluating the non-singular images at the base point collapses pairwise to

        A = sum_(k>=1) (2 sinh(k L / 2))^(2-n) / (2 (n-1) omega_(n-1)),

    a manifestly positive, geometrically convergent sum.
    """
    if n < 4 or n % 2:
        raise InvalidModelError("cylinder quotient needs even dimension >= 4")
    if L <= 0:
        raise InvalidModelError("cylinder period must be positive")
    front = 1.0 / (2.0 * (n - 1) * sphere_volume(n - 1))
    ratio = math.exp(-0.5 * (n - 2) * L)
    terms = []
    k = 1
    while True:
        term = (2.0 * math.sinh(0.5 * k * L)) ** (2 - n)
        terms.append(term)
        partial = neumaier_sum(terms)
        if term * ratio / (1.0 - ratio) <= tol * partial:
            return front * partial
        k += 1
        if k > 10_000:
            raise RuntimeError("cylinder mass sum failed to converge")


# ---------------------------------------------------------------------------
# Conformal covariance and mass extraction
# ---------------------------------------------------------------------------


def conformal_covariance_transform(kernel: KernelEvaluation,
                                   u: ConformalFactor) -> KernelEvaluation:
    """Green function of the conformally rescaled metric u^(4/(n-2)) g.

    The kernel picks up the factor u(P)^-1 u(x)^-1; this is the transformation
    law that makes the rescaled-metric operator annihilate the new kernel.
    """
    u_src = float(u(kernel.source))
    u_tgt = float(u(kernel.target))
    if u_src <= 0 or u_tgt <= 0:
        raise ValueError("conformal factor must be positive at the evaluation points")
    return KernelEvaluation(
        source=kernel.source,
        target=kernel.target,
        value=kernel.value / (u_src * u_tgt),
        method=kernel.method,
    )


def extract_mass(samples, tol: float | None = None):
    """Constant term of a Green expansion from angular-averaged samples.

    ``samples`` are pairs (r_i, average of Gamma_hat - flat leading term) at
    radii decreasing by a fixed factor inside the flat-gauge ball.  The
    remainder is r times a smooth radial function, so eliminating the r and
    r^2 error terms extrapolates the r -> 0 constant.  Returns (mass, spread);
    raises ExtrapolationError when the tableau fails to settle below ``tol``.
    """
    radii = [float(r) for r, _ in samples]
    values = [float(v) for _, v in samples]
    if len(radii) < 3:
        raise ValueError("need at least three radii to extrapolate")
    ratios = [radii[i] / radii[i + 1] for i in range(len(radii) - 1)]
    ratio = ratios[0]
    if any(abs(q - ratio) > 1e-9 * ratio for q in ratios):
        raise ValueError("sample radii must decrease by a fixed ratio")
    return richardson_limit(values, ratio=ratio, powers=(1, 2), tol=tol)


def extraction_radii(r0: float, start: int = 2, stop: int = 8):
    return [r0 * 2.0 ** (-i) for i in range(start, stop + 1)]


def _direction_average(values_fn, n: int, radii, level: int = 8):
    """Angular averages of a chart function over flat spheres around the origin."""
    dirs, w = sphere_surface_quadrature(n - 1, level)
    total = np.sum(w)
    out = []
    for r in radii:
        vals = values_fn(r * dirs)
        out.append(float(np.sum(w * vals) / total))
    return out


def flat_gauge_expansion(model: ModelGeometry, r0: float = 0.25,
                         level: int = 8, tol: float | None = None) -> GreenExpansion:
    """Mass and regular part of the model's Green function in its flat gauge.

    Samples the gauge-transformed kernel minus the flat leading term on
    shrinking spheres and extrapolates the constant.  Refuses models whose
    conformal Laplacian is not invertible.
    """
    require_admissible(model)
    n = model.n
    radii = extraction_radii(r0)

    if isinstance(model, RoundSphere):
        P = sphere_base_point(n)

        def reg(points):
            s = np.linalg.norm(points, axis=-1)
            return sphere_flat_gauge_green(n, P, points) - flat_kernel(n, s)

        gauge = "stereographic chart from the antipode"
    elif isinstance(model, ProjectiveSpace):
        if n % 2:
            raise InvalidModelError("projective quotient mass needs even dimension")
        P = projective_base_point(n)

        def reg(points):
            s = np.linalg.norm(points, axis=-1)
            return projective_flat_gauge_green(n, P, points) - flat_kernel(n, s)

        gauge = "stereographic chart from the antipode"
    elif isinstance(model, CylinderQuotient):
        P = cylinder_base_point(n)

        def reg(points):
            pts = np.atleast_2d(points) + P.coords
            s = np.linalg.norm(np.atleast_2d(points), axis=-1)
            return cylinder_flat_gauge_green(n, model.L, P, pts) - flat_kernel(n, s)

        gauge = "punctured flat chart at unit radius"
        r0 = min(r0, 0.8 * math.tanh(0.5 * model.L))
        radii = extraction_radii(r0)
    else:
        raise InvalidModelError(f"no Green expansion for {model!r}")

    averages = _direction_average(reg, n, radii, level=level)
    mass, spread = extract_mass(list(zip(radii, averages)), tol=tol)
    return GreenExpansion(
        n=n,
        mass=mass,
        leading_normalization=1.0 / (4.0 * (n - 1) * sphere_volume(n - 1)),
        regular_samples=list(zip(radii, averages)),
        gauge=gauge,
        error_estimate=spread,
    )


def closed_form_mass(model: ModelGeometry) -> float:
    """Reference mass value where a closed form exists."""
    if isinstance(model, RoundSphere):
        return 0.0
    if isinstance(model, ProjectiveSpace):
        return projective_mass(model.n)
    if isinstance(model, CylinderQuotient):
        return cylinder_mass(model.n, model.L)
    raise InvalidModelError(f"no closed-form mass for {model!r}")
