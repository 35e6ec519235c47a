"""Exact truncated Laurent-series arithmetic over rational polynomial symbols.

The coefficient ring is the polynomial ring over Q in a handful of formal
symbols: the mass constant ``A``, the sphere-volume constant ``w``, and the
Taylor coefficient families ``b*`` (regular remainder of the normalized Green
function, written as r times a smooth radial function), ``c*`` (cross term
between the singular model form and the smooth correction form), and ``e*``
(squared norm of the correction form).  Everything is exact; no floats enter.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

MASS = "A"
SPHERE_VOL = "w"


class PolyQ:
    """Multivariate polynomial with exact rational coefficients.

    Terms map a canonical monomial key, a sorted tuple of (symbol, exponent)
    pairs, to a nonzero Fraction.  The zero polynomial is the empty map.
    """

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms = {}
        if terms:
            for mono, coeff in terms.items():
                coeff = Fraction(coeff)
                if coeff != 0:
                    self.terms[mono] = self.terms.get(mono, Fraction(0)) + coeff
            self.terms = {m: c for m, c in self.terms.items() if c != 0}

    @staticmethod
    def const(value) -> "PolyQ":
        value = Fraction(value)
        return PolyQ({(): value} if value != 0 else {})

    @staticmethod
    def symbol(name: str, power: int = 1) -> "PolyQ":
        return PolyQ({((name, power),): Fraction(1)})

    def is_zero(self) -> bool:
        return not self.terms

    def constant_value(self):
        """The rational value of a constant polynomial, else None."""
        if self.is_zero():
            return Fraction(0)
        if set(self.terms) == {()}:
            return self.terms[()]
        return None

    def symbols(self) -> set:
        return {name for mono in self.terms for name, _ in mono}

    def __add__(self, other):
        other = _as_poly(other)
        out = dict(self.terms)
        for mono, coeff in other.terms.items():
            acc = out.get(mono, Fraction(0)) + coeff
            if acc == 0:
                out.pop(mono, None)
            else:
                out[mono] = acc
        res = PolyQ()
        res.terms = out
        return res

    __radd__ = __add__

    def __neg__(self):
        res = PolyQ()
        res.terms = {m: -c for m, c in self.terms.items()}
        return res

    def __sub__(self, other):
        return self + (-_as_poly(other))

    def __rsub__(self, other):
        return _as_poly(other) + (-self)

    def __mul__(self, other):
        other = _as_poly(other)
        out = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                mono = _merge_monomials(m1, m2)
                acc = out.get(mono, Fraction(0)) + c1 * c2
                if acc == 0:
                    out.pop(mono, None)
                else:
                    out[mono] = acc
        res = PolyQ()
        res.terms = out
        return res

    __rmul__ = __mul__

    def __eq__(self, other):
        return self.terms == _as_poly(other).terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __repr__(self):
        if self.is_zero():
            return "0"
        parts = []
        for mono in sorted(self.terms):
            coeff = self.terms[mono]
            factors = "*".join(
                name if power == 1 else f"{name}^{power}" for name, power in mono
            )
            if not factors:
                parts.append(str(coeff))
            elif coeff == 1:
                parts.append(factors)
            elif coeff == -1:
                parts.append(f"-{factors}")
            else:
                parts.append(f"{coeff}*{factors}")
        joined = " + ".join(parts)
        return joined.replace("+ -", "- ")


def _merge_monomials(m1, m2):
    powers = {}
    for name, p in m1:
        powers[name] = powers.get(name, 0) + p
    for name, p in m2:
        powers[name] = powers.get(name, 0) + p
    return tuple(sorted((name, p) for name, p in powers.items() if p != 0))


def _as_poly(value) -> PolyQ:
    if isinstance(value, PolyQ):
        return value
    if isinstance(value, (int, Fraction)):
        return PolyQ.const(value)
    raise TypeError(f"cannot coerce {type(value).__name__} into a polynomial")


ZERO = PolyQ()
ONE = PolyQ.const(1)


@dataclass(frozen=True)
class RadialSeries:
    """Truncated Laurent series in the radial variable with PolyQ coefficients.

    ``order`` is the largest exponent whose coefficient is trusted; arithmetic
    propagates orders so that results never silently depend on truncated tails.
    """

    coeffs: dict
    order: int

    @staticmethod
    def build(terms: dict, order: int) -> "RadialSeries":
        clean = {}
        for k, v in terms.items():
            poly = _as_poly(v)
            if int(k) > order:
                raise ValueError(f"term r^{k} lies beyond the truncation order {order}")
            if not poly.is_zero():
                clean[int(k)] = poly
        return RadialSeries(coeffs=clean, order=int(order))

    @staticmethod
    def constant(value, order: int) -> "RadialSeries":
        return RadialSeries.build({0: _as_poly(value)}, order)

    @staticmethod
    def monomial(value, exponent: int, order: int) -> "RadialSeries":
        return RadialSeries.build({exponent: _as_poly(value)}, order)

    def lowest(self) -> int:
        """Lowest exponent carrying a nonzero coefficient (order+1 if zero)."""
        return min(self.coeffs) if self.coeffs else self.order + 1

    def coefficient(self, exponent: int) -> PolyQ:
        if exponent > self.order:
            raise ValueError(
                f"coefficient of r^{exponent} is beyond the valid order {self.order}"
            )
        return self.coeffs.get(exponent, ZERO)

    def truncate(self, order: int) -> "RadialSeries":
        if order > self.order:
            raise ValueError("cannot extend a series beyond its valid order")
        return RadialSeries(
            coeffs={k: v for k, v in self.coeffs.items() if k <= order}, order=order
        )

    def __add__(self, other: "RadialSeries") -> "RadialSeries":
        order = min(self.order, other.order)
        out = {k: v for k, v in self.coeffs.items() if k <= order}
        for k, v in other.coeffs.items():
            if k > order:
                continue
            acc = out.get(k, ZERO) + v
            if acc.is_zero():
                out.pop(k, None)
            else:
                out[k] = acc
        return RadialSeries(coeffs=out, order=order)

    def __neg__(self) -> "RadialSeries":
        return RadialSeries(coeffs={k: -v for k, v in self.coeffs.items()}, order=self.order)

    def __sub__(self, other: "RadialSeries") -> "RadialSeries":
        return self + (-other)

    def __mul__(self, other: "RadialSeries") -> "RadialSeries":
        # Terms of a beyond its order would contribute at a.order + other.lowest()
        # and above, so the product is trusted strictly below that exponent.
        order = min(self.order + other.lowest(), other.order + self.lowest())
        out = {}
        for k1, v1 in self.coeffs.items():
            for k2, v2 in other.coeffs.items():
                k = k1 + k2
                if k > order:
                    continue
                acc = out.get(k, ZERO) + v1 * v2
                if acc.is_zero():
                    out.pop(k, None)
                else:
                    out[k] = acc
        return RadialSeries(coeffs=out, order=order)

    def scale(self, value) -> "RadialSeries":
        poly = _as_poly(value)
        if poly.is_zero():
            return RadialSeries(coeffs={}, order=self.order)
        return RadialSeries(
            coeffs={k: poly * v for k, v in self.coeffs.items()}, order=self.order
        )

    def shift(self, exponent: int) -> "RadialSeries":
        """Multiply by r^exponent."""
        return RadialSeries(
            coeffs={k + exponent: v for k, v in self.coeffs.items()},
            order=self.order + exponent,
        )

    def derivative(self) -> "RadialSeries":
        out = {}
        for k, v in self.coeffs.items():
            if k == 0:
                continue
            out[k - 1] = v * Fraction(k)
        return RadialSeries(coeffs=out, order=self.order - 1)

    def __repr__(self):
        if not self.coeffs:
            return f"O(r^{self.order + 1})"
        parts = [f"({self.coeffs[k]!r})*r^{k}" for k in sorted(self.coeffs)]
        return " + ".join(parts) + f" + O(r^{self.order + 1})"


def series_add(a: RadialSeries, b: RadialSeries) -> RadialSeries:
    return a + b


def series_mul(a: RadialSeries, b: RadialSeries) -> RadialSeries:
    return a * b


def series_derivative(a: RadialSeries) -> RadialSeries:
    return a.derivative()


def series_pow_rational(a: RadialSeries, alpha) -> RadialSeries:
    """Rational power of a Laurent series whose leading coefficient is 1.

    Writes a = r^m (1 + x) with x of positive relative order and expands the
    binomial series of (1 + x)^alpha exactly; m * alpha must be an integer so
    that the result stays a Laurent series.
    """
    alpha = Fraction(alpha)
    m = a.lowest()
    if m > a.order:
        raise ValueError("cannot raise the zero series to a power")
    if a.coefficient(m) != ONE:
        raise ValueError("leading coefficient must be exactly 1")
    lead = alpha * m
    if lead.denominator != 1:
        raise ValueError(f"power would produce the non-integer exponent r^{lead}")
    x = a.shift(-m) - RadialSeries.constant(1, a.order - m)
    out = RadialSeries.constant(1, x.order)
    term = RadialSeries.constant(1, x.order)
    binom = Fraction(1)
    x_low = x.lowest()  # >= 1 since the leading term was removed
    k = 0
    while k * x_low <= x.order:
        k += 1
        binom = binom * (alpha - (k - 1)) / k
        term = term * x
        out = out + term.scale(binom)
        if term.lowest() > term.order:
            break
    return out.shift(int(lead))


# ---------------------------------------------------------------------------
# Model series for the normalized Green expansion and the blown-up form norm
# ---------------------------------------------------------------------------


def default_order(n: int) -> int:
    """Truncation deep enough to expose where the b/c/e symbols first enter."""
    return 2 * n + 2


def _coeff_family(prefix: str, length: int):
    return [PolyQ.symbol(f"{prefix}{j}") for j in range(length)]


def normalized_green_series(n: int, order: int | None = None) -> RadialSeries:
    """Green function scaled by 4(n-1)w so the singular term is exactly r^(2-n).

    r^(2-n) + 4(n-1) w A + r * sum_j b_j r^j, truncated at the given order.
    """
    if n < 4 or n % 2:
        raise ValueError("even dimension >= 4 required")
    if order is None:
        order = default_order(n)
    mass_coeff = PolyQ.const(4 * (n - 1)) * PolyQ.symbol(SPHERE_VOL) * PolyQ.symbol(MASS)
    terms = {2 - n: ONE, 0: mass_coeff}
    for j, b in enumerate(_coeff_family("b", order)):
        k = 1 + j
        if k <= order:
            terms[k] = b
    return RadialSeries.build(terms, order)


def form_norm_series(n: int, order: int | None = None, cross_factor: int = 2) -> RadialSeries:
    """Squared norm of the blown-up middle-degree harmonic form near the base point.

    The product of the scaled Green factor raised to -2n/(n-2) with the norm
    expansion of (singular model form + smooth correction), where the model
    part is radially parallel so only the coupling terms carry r-dependence:

        (1 + 4(n-1) w A r^(n-2) + r^(n-1) B(r))^(-2n/(n-2))
            * (1 + cross_factor * r^n C(r) + r^(2n) E(r)).

    ``cross_factor`` is 2 for the |u+v|^2 expansion; the variant 1 is kept so
    tests can show the disputed factor never reaches the asserted coefficients.
    """
    if n < 4 or n % 2:
        raise ValueError("even dimension >= 4 required")
    if order is None:
        order = default_order(n)
    mass_coeff = PolyQ.const(4 * (n - 1)) * PolyQ.symbol(SPHERE_VOL) * PolyQ.symbol(MASS)
    base_terms = {0: ONE, n - 2: mass_coeff}
    for j, b in enumerate(_coeff_family("b", order)):
        k = n - 1 + j
        if k <= order:
            base_terms[k] = b
    base = RadialSeries.build(base_terms, order)
    factor1 = series_pow_rational(base, Fraction(-2 * n, n - 2))

    model_terms = {0: ONE}
    for j, c in enumerate(_coeff_family("c", order)):
        k = n + j
        if k <= order:
            model_terms[k] = PolyQ.const(cross_factor) * c
    for j, e in enumerate(_coeff_family("e", order)):
        k = 2 * n + j
        if k <= order:
            model_terms[k] = model_terms.get(k, ZERO) + e
    model = RadialSeries.build(
        {k: v for k, v in model_terms.items() if not _as_poly(v).is_zero()}, order
    )
    return factor1 * model


@dataclass
class CoefficientCheck:
    name: str
    exponent: int
    expected: PolyQ
    measured: PolyQ

    @property
    def passed(self) -> bool:
        return self.expected == self.measured


@dataclass
class SeriesVerification:
    """Outcome of an exact coefficient verification."""

    n: int
    passed: bool
    leading_coefficient: PolyQ
    checks: list = field(default_factory=list)

    def failures(self):
        return [c for c in self.checks if not c.passed]


def verify_mass_derivative(n: int, order: int | None = None,
                           cross_factor: int = 2) -> SeriesVerification:
    """Exact check of the radial derivative of the blown-up form norm.

    Every coefficient below r^(n-3) must vanish identically and the r^(n-3)
    coefficient must equal -8n(n-1) w A, with no dependence on the b/c/e
    symbol families.
    """
    if order is None:
        order = default_order(n)
    deriv = form_norm_series(n, order, cross_factor=cross_factor).derivative()
    checks = []
    for k in range(deriv.lowest(), n - 3):
        checks.append(
            CoefficientCheck(
                name=f"derivative coefficient r^{k} vanishes",
                exponent=k,
                expected=ZERO,
                measured=deriv.coefficient(k),
            )
        )
    expected = (
        PolyQ.const(-8 * n * (n - 1)) * PolyQ.symbol(SPHERE_VOL) * PolyQ.symbol(MASS)
    )
    leading = deriv.coefficient(n - 3)
    checks.append(
        CoefficientCheck(
            name=f"derivative coefficient r^{n - 3}",
            exponent=n - 3,
            expected=expected,
            measured=leading,
        )
    )
    checks.append(
        CoefficientCheck(
            name="leading coefficient uses only the mass and volume symbols",
            exponent=n - 3,
            expected=ZERO,
            measured=ZERO if leading.symbols() <= {MASS, SPHERE_VOL} else leading,
        )
    )
    return SeriesVerification(
        n=n,
        passed=all(c.passed for c in checks),
        leading_coefficient=leading,
        checks=checks,
    )


def verify_flux_limit(n: int, order: int | None = None,
                      cross_factor: int = 2) -> SeriesVerification:
    """Exact check of the boundary-flux limit of the blown-up form energy.

    Composes the inward-normal derivative -(G^(-2/(n-2))) d/dr of the form
    norm with the induced area series G^(2(n-1)/(n-2)) r^(n-1), integrates the
    angular factor as a multiplication by w, and halves.  All negative-order
    coefficients must vanish identically and the constant term must equal
    4n(n-1) w^2 A.
    """
    if order is None:
        order = default_order(n)
    green = normalized_green_series(n, order)
    deriv = form_norm_series(n, order, cross_factor=cross_factor).derivative()
    normal = series_pow_rational(green, Fraction(-2, n - 2)).scale(Fraction(-1))
    area = series_pow_rational(green, Fraction(2 * (n - 1), n - 2)).shift(n - 1)
    flux = (normal * deriv * area).scale(Fraction(1, 2) * PolyQ.symbol(SPHERE_VOL))
    checks = []
    for k in range(flux.lowest(), 0):
        checks.append(
            CoefficientCheck(
                name=f"flux coefficient r^{k} vanishes",
                exponent=k,
                expected=ZERO,
                measured=flux.coefficient(k),
            )
        )
    expected = (
        PolyQ.const(4 * n * (n - 1))
        * PolyQ.symbol(SPHERE_VOL, 2)
        * PolyQ.symbol(MASS)
    )
    limit = flux.coefficient(0)
    checks.append(
        CoefficientCheck(
            name="flux constant term",
            exponent=0,
            expected=expected,
            measured=limit,
        )
    )
    checks.append(
        CoefficientCheck(
            name="flux limit uses only the mass and volume symbols",
            exponent=0,
            expected=ZERO,
            measured=ZERO if limit.symbols() <= {MASS, SPHERE_VOL} else limit,
        )
    )
    return SeriesVerification(
        n=n,
        passed=all(c.passed for c in checks),
        leading_coefficient=limit,
        checks=checks,
    )
