"""Numerical laboratory for the generalized Ricci flow on Lie groups.

Brackets are stored as structure constants in an orthonormal basis; the flow,
curvature and soliton tools all act on :class:`DorfmanBracket` values.
"""

from .courant import (
    ClosednessError,
    DorfmanBracket,
    GenEndo,
    JacobiError,
    LElement,
    a_term,
    big_theta,
    bismut_ricci,
    ce_differential,
    codifferential,
    dorfman_norm2,
    gen_ricci,
    gen_scalar,
    h_squared,
    l_inner,
    l_moment_map,
    laplacian,
)
from .flow import (
    FlowOptions,
    FlowOutcome,
    OutcomeKind,
    TrajectorySample,
    asymptotic_scalar_fit,
    detect_blowup,
    integrate,
    integrate_batch,
    normalized_vector_field,
    vector_field,
)
from .liealg import LieBracket, derivation_algebra, ricci, scalar_curvature, structure_report
from .multilinear import KForm, form_inner, interior_product, rho_action, theta_action
from .soliton import (
    SolitonCertificate,
    SolitonClass,
    classify_type,
    functional_F,
    reproduce_classification,
    search_soliton,
    verify_soliton,
)

__version__ = "0.1.0"
