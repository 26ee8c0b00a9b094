"""Analysis of reflected random walks in the quarter plane.

The package builds the stationary functional equation of a step-set model,
studies the algebraic curve attached to its kernel polynomial (branch points,
genus, boundary curves), and solves the resulting boundary value problem
numerically for walks whose negative jumps have unit amplitude.  Brute-force
oracles (truncated-chain solver, Monte Carlo simulation, grid sweeps) are
shipped alongside so every analytic stage can be cross-checked.
"""

from .errors import ModelError, NumericalError
from .model import (
    FunctionalEquation,
    HomogeneityClass,
    JumpBounds,
    StepDistribution,
    ValidationReport,
    WalkModel,
    assemble_functional_equation,
    classify_state,
    isolated_points,
    load_model,
    model_from_dict,
    model_to_dict,
    save_model,
    validate_model,
)
from .kernel import (
    BivariatePolynomial,
    UnivariatePolynomial,
    cluster_roots,
    discriminant,
    kernel_from_model,
    resultant,
)
from .branch import (
    BranchPoint,
    CutSegment,
    GenusReport,
    branch_count_bounds,
    find_branch_points,
    genus_by_monodromy,
    genus_cross_checked,
    pair_cuts,
    unit_circle_winding,
)
from .curve import (
    CurveReport,
    CurveTrace,
    automorphism_at,
    component_separation,
    curve_metrics,
    curve_validated_branch_points,
    trace_curve,
    validate_cut,
    validated_cuts,
)

__version__ = "0.1.0"

__all__ = [
    "ModelError",
    "NumericalError",
    "FunctionalEquation",
    "HomogeneityClass",
    "JumpBounds",
    "StepDistribution",
    "ValidationReport",
    "WalkModel",
    "assemble_functional_equation",
    "classify_state",
    "isolated_points",
    "load_model",
    "model_from_dict",
    "model_to_dict",
    "save_model",
    "validate_model",
    "BivariatePolynomial",
    "UnivariatePolynomial",
    "cluster_roots",
    "discriminant",
    "kernel_from_model",
    "resultant",
    "BranchPoint",
    "CutSegment",
    "GenusReport",
    "branch_count_bounds",
    "find_branch_points",
    "genus_by_monodromy",
    "genus_cross_checked",
    "pair_cuts",
    "unit_circle_winding",
    "CurveReport",
    "CurveTrace",
    "automorphism_at",
    "component_separation",
    "curve_metrics",
    "curve_validated_branch_points",
    "trace_curve",
    "validate_cut",
    "validated_cuts",
]
