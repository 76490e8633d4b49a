"""frobkit: exact symbolic verification of WDVV potential structures.

The kernel works over sums of rational-coefficient terms whose first variable
may carry fractional exponents and logarithms; on top of it sit a
contravariant-metric calculus (Christoffel symbols, curvature, Lie
derivatives of hydrodynamic bracket coefficients, pencils, pushforwards), the
Frobenius-structure checks for a potential, and the conjugation/inversion
transforms with their involution and equality reports.
"""

from .expr import (
    BranchError,
    EvaluationError,
    Expr,
    Monomial,
    ParseError,
    RatExpr,
    SubstitutionError,
    equals_mod_quadratic,
    format_expr,
    parse_expr,
)
from .geometry import (
    ContraMetric,
    CoordinateMap,
    SingularMetricError,
    christoffels,
    gradient,
    is_flat,
    lie_metric,
    lie_pbht,
    pencil_check,
    pushforward,
    riemann_components,
)
from .frobenius import (
    FrobeniusSpec,
    QfpmBundle,
    SpecError,
    assemble_qfpm,
    degree_duality,
    flat_metric_from_potential,
    intersection_form,
    make_spec,
    quasihomogeneity_check,
    regularity,
    wdvv_residual,
)
from .conjugate import (
    InapplicableError,
    conjugate_coordinates,
    conjugate_pencil,
    conjugate_potential,
    inversion_symmetry,
    involution_check,
    potential_equality_check,
)
from .cli import __version__, load_spec, run

__all__ = [name for name in dir() if not name.startswith("_")]
