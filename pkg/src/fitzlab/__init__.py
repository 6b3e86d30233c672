"""Fitzpatrick functions, S-functions and Fenchel conjugation on desk-scale grids.

The library checks two characterizations of maximal monotone operators
numerically: translation-based conditions on a convex ``h`` representing an
operator, and the equivalence of the "MA" and "NI" properties over a finite
family of representatives.
"""

from .conditions import (
    ConditionReport,
    Verdict,
    aux_infimum,
    br_search,
    check_aux_condition,
    check_conj_above_pi,
    check_h_above_pi,
    check_ni,
    translate,
)
from .models import AbsoluteValue, Power, Quadratic, model_from_dict
from .numerics import INF, GridFunction, GridSpec, PairFunction, PairPoint, sample_on_grid
from .operators import (
    FitzpatrickFunction,
    OperatorGraph,
    SFunction,
    check_monotone,
    family_members,
    fitzpatrick,
    graph_from_subdifferential,
    s_function,
)
from .theorems import Agreement, EquivalenceReport, proof_identity_checks, theorem1_suite, theorem2_suite
from .transform import biconjugate, conjugate, conjugate_bruteforce, conjugate_llt, j_transform

__version__ = "0.1.0"

__all__ = [
    "INF",
    "AbsoluteValue",
    "Agreement",
    "ConditionReport",
    "EquivalenceReport",
    "FitzpatrickFunction",
    "GridFunction",
    "GridSpec",
    "OperatorGraph",
    "PairFunction",
    "PairPoint",
    "Power",
    "Quadratic",
    "SFunction",
    "Verdict",
    "aux_infimum",
    "biconjugate",
    "br_search",
    "check_aux_condition",
    "check_conj_above_pi",
    "check_h_above_pi",
    "check_monotone",
    "check_ni",
    "conjugate",
    "conjugate_bruteforce",
    "conjugate_llt",
    "family_members",
    "fitzpatrick",
    "graph_from_subdifferential",
    "j_transform",
    "model_from_dict",
    "proof_identity_checks",
    "s_function",
    "sample_on_grid",
    "theorem1_suite",
    "theorem2_suite",
    "translate",
]
