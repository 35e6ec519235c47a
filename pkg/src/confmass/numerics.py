"""Shared numerical utilities: deterministic reductions, quadrature,
polynomial cut-off ramps, zonal harmonic values, and extrapolation."""

from __future__ import annotations

import math
from math import comb

import numpy as np


def neumaier_sum(terms) -> float:
    """Compensated summation in the given (fixed) term order.

    Keeps results bit-reproducible regardless of how the terms were produced.
    """
    total = 0.0
    comp = 0.0
    for t in terms:
        t = float(t)
        s = total + t
        if abs(total) >= abs(t):
            comp += (total - s) + t
        else:
            comp += (t - s) + total
        total = s
    return total + comp


class ExtrapolationError(RuntimeError):
    """Raised when a radial extrapolation fails to settle below tolerance."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


def richardson_limit(values, ratio=2.0, powers=(1, 2), tol=None):
    """Limit of samples y_i = y(r_i) with r_{i+1} = r_i / ratio as r -> 0.

    Successively eliminates the error terms r^p for p in ``powers`` (the
    remainder model here is a smooth function of r, A + c1 r + c2 r^2 + ...).
    Returns (limit, spread) where the spread of the last elimination column
    serves as the error estimate.  If ``tol`` is given and the spread exceeds
    it, an ExtrapolationError carrying the full tableau is raised.
    """
    col = [float(v) for v in values]
    if len(col) < len(powers) + 1:
        raise ValueError("need at least len(powers)+1 samples to extrapolate")
    tableau = [list(col)]
    for p in powers:
        mult = ratio ** p
        col = [(mult * col[i + 1] - col[i]) / (mult - 1.0) for i in range(len(col) - 1)]
        tableau.append(list(col))
    spread = max(col) - min(col) if len(col) > 1 else 0.0
    limit = col[-1]
    if tol is not None and not (spread <= tol):
        raise ExtrapolationError(
            f"extrapolation spread {spread:.3e} exceeds tolerance {tol:.3e}",
            diagnostics={"tableau": tableau, "spread": spread},
        )
    return limit, spread


# ---------------------------------------------------------------------------
# Quadrature
# ---------------------------------------------------------------------------


def gauss_legendre(a: float, b: float, num: int):
    """Gauss-Legendre nodes and weights on [a, b]."""
    x, w = np.polynomial.legendre.leggauss(num)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return mid + half * x, half * w


def sphere_surface_quadrature(d: int, level: int = 24):
    """Quadrature (directions, weights) for the unit sphere S^d in R^(d+1).

    Product rule: Gauss-Legendre in each polar angle, trapezoid in the
    periodic azimuth.  Weights sum to the exact sphere volume up to
    quadrature accuracy.
    """
    if d < 1:
        raise ValueError("sphere dimension must be >= 1")
    if d == 1:
        phi = 2.0 * math.pi * np.arange(2 * level) / (2 * level)
        pts = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
        w = np.full(2 * level, 2.0 * math.pi / (2 * level))
        return pts, w
    theta, wt = gauss_legendre(0.0, math.pi, level)
    sub_pts, sub_w = sphere_surface_quadrature(d - 1, level)
    sin_t, cos_t = np.sin(theta), np.cos(theta)
    # x = (cos(theta), sin(theta) * y) with y on S^(d-1); measure sin^(d-1).
    pts = np.concatenate(
        [
            np.repeat(cos_t, len(sub_pts))[:, None],
            np.einsum("i,jk->ijk", sin_t, sub_pts).reshape(-1, d),
        ],
        axis=1,
    )
    w = np.multiply.outer(wt * sin_t ** (d - 1), sub_w).reshape(-1)
    return pts, w


# ---------------------------------------------------------------------------
# Polynomial cut-off ramps
# ---------------------------------------------------------------------------


class SmoothRamp:
    """Polynomial ramp from 0 to 1 on [0, 1] with C^order endpoint contact.

    s(t) is the regularized incomplete beta integral of t^k (1-t)^k, the
    standard smoothstep family; first and second derivatives are closed-form.
    """

    def __init__(self, order: int):
        if order < 1:
            raise ValueError("ramp order must be >= 1")
        self.order = order
        # 1 / B(k+1, k+1) with k = order
        self._norm = (2 * order + 1) * comb(2 * order, order)
        # antiderivative coefficients of t^k (1-t)^k = sum_j (-1)^j C(k,j) t^(k+j)
        self._coeffs = [
            ((-1) ** j) * comb(order, j) / (order + j + 1) for j in range(order + 1)
        ]

    def value(self, t):
        t = np.asarray(t, dtype=float)
        out = np.where(t >= 1.0, 1.0, 0.0)
        inside = (t > 0.0) & (t < 1.0)
        tt = t[inside]
        acc = np.zeros_like(tt)
        for j in reversed(range(self.order + 1)):
            acc = acc * tt + self._coeffs[j]
        out[inside] = self._norm * acc * tt ** (self.order + 1)
        return out

    def deriv(self, t):
        t = np.asarray(t, dtype=float)
        inside = (t > 0.0) & (t < 1.0)
        out = np.zeros_like(t)
        tt = t[inside]
        out[inside] = self._norm * tt ** self.order * (1.0 - tt) ** self.order
        return out

    def deriv2(self, t):
        t = np.asarray(t, dtype=float)
        inside = (t > 0.0) & (t < 1.0)
        out = np.zeros_like(t)
        tt = t[inside]
        k = self.order
        out[inside] = self._norm * (
            k * tt ** (k - 1) * (1.0 - tt) ** k - k * tt ** k * (1.0 - tt) ** (k - 1)
        )
        return out


class RadialCutoff:
    """Cut-off equal to 1 inside r_inner, 0 outside r_outer, ramped between."""

    def __init__(self, r_inner: float, r_outer: float, order: int = 7):
        if not (0 < r_inner < r_outer):
            raise ValueError("need 0 < r_inner < r_outer")
        self.r_inner = float(r_inner)
        self.r_outer = float(r_outer)
        self.ramp = SmoothRamp(order)

    def _t(self, r):
        return (np.asarray(r, dtype=float) - self.r_inner) / (self.r_outer - self.r_inner)

    def value(self, r):
        return 1.0 - self.ramp.value(self._t(r))

    def deriv(self, r):
        return -self.ramp.deriv(self._t(r)) / (self.r_outer - self.r_inner)

    def deriv2(self, r):
        return -self.ramp.deriv2(self._t(r)) / (self.r_outer - self.r_inner) ** 2


def angular_bump(x, lo: float, hi: float, power: int = 4):
    """C^(power-1) bump supported on [lo, hi], normalized to unit peak.

    Returns (value, first derivative, second derivative) with respect to x.
    """
    x = np.asarray(x, dtype=float)
    width = hi - lo
    t = (x - lo) / width
    inside = (t > 0.0) & (t < 1.0)
    val = np.zeros_like(x)
    d1 = np.zeros_like(x)
    d2 = np.zeros_like(x)
    tt = t[inside]
    peak = 0.25 ** power
    g = tt * (1.0 - tt)
    gp = 1.0 - 2.0 * tt
    val[inside] = g ** power / peak
    d1[inside] = power * g ** (power - 1) * gp / (peak * width)
    d2[inside] = (
        power * (power - 1) * g ** (power - 2) * gp ** 2 - 2.0 * power * g ** (power - 1)
    ) / (peak * width ** 2)
    return val, d1, d2


# ---------------------------------------------------------------------------
# Zonal harmonics
# ---------------------------------------------------------------------------


def harmonic_multiplicity(d: int, l: int) -> int:
    """Dimension of the degree-l spherical-harmonic space on S^d."""
    d, l = int(d), int(l)
    if l < 2:
        return 1 if l == 0 else d + 1
    return comb(d + l, l) - comb(d + l - 2, l - 2)


def zonal_values(d: int, lmax: int, t: np.ndarray) -> np.ndarray:
    """Normalized zonal polynomials P_l on S^d at t = cos(angle).

    Gegenbauer three-term recurrence with index alpha = (d-1)/2, scaled so
    P_l(1) = 1.  Returns an array of shape (lmax+1, len(t)).
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    alpha = 0.5 * (d - 1)
    out = np.empty((lmax + 1, t.size), dtype=float)
    prev2 = np.ones_like(t)
    out[0] = prev2
    if lmax == 0:
        return out
    prev1 = 2.0 * alpha * t
    norm1 = 2.0 * alpha  # C_1(1)
    out[1] = prev1 / norm1
    norm2 = 1.0
    for l in range(2, lmax + 1):
        cur = (2.0 * t * (l + alpha - 1.0) * prev1 - (l + 2.0 * alpha - 2.0) * prev2) / l
        norm = (2.0 * (l + alpha - 1.0) * norm1 - (l + 2.0 * alpha - 2.0) * norm2) / l
        out[l] = cur / norm
        prev2, prev1 = prev1, cur
        norm2, norm1 = norm1, norm
    return out
