"""Green-function masses of conformally flat model manifolds.

The toolkit computes the constant term of conformal-Laplacian Green
expansions on a library of closed conformally flat models, verifies the
governing radial identities in exact rational arithmetic, cross-checks every
mass against an eigenfunction-expansion solver, and validates the
middle-degree discrete form calculus the argument rests on.
"""

from .geometry import (
    BasePoint,
    ConformalFactor,
    CylinderQuotient,
    FlatTorus,
    InadmissibleModelError,
    InvalidModelError,
    ModelGeometry,
    ProjectiveSpace,
    RoundSphere,
    check_conformal_class_admissible,
    conformal_laplacian_coefficient,
    model_from_json,
    model_to_json,
    scalar_curvature,
    sphere_volume,
)
from .kernels import (
    GreenExpansion,
    KernelEvaluation,
    conformal_covariance_transform,
    cylinder_green,
    cylinder_mass,
    extract_mass,
    flat_gauge_expansion,
    flat_kernel,
    projective_green,
    projective_mass,
    sphere_green,
)
from .series import (
    PolyQ,
    RadialSeries,
    form_norm_series,
    normalized_green_series,
    series_add,
    series_derivative,
    series_mul,
    series_pow_rational,
    verify_flux_limit,
    verify_mass_derivative,
)
from .spectral import (
    EigenBasis,
    build_eigenbasis,
    eigen_green,
    perturbed_mass,
    solve_regular_part,
)
from .dec import (
    Cochain,
    CubicalGrid,
    MetricField,
    build_d,
    build_star,
    codifferential,
    harmonic_space,
    hodge_laplacian,
    inversion_pullback,
    flat_weitzenboeck_check,
)

__version__ = "0.1.0"
