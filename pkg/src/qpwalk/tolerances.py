"""Central table of numerical tolerances.

Every tunable threshold used by the pipeline lives here so that a run can be
reproduced from its configuration alone.  Callers pass ``--tol KEY=VAL`` on
the command line (or a plain dict through the API) to override individual
entries; unknown keys are rejected to catch typos.
"""

from __future__ import annotations

from types import MappingProxyType

DEFAULTS = MappingProxyType(
    {
        # model validation
        "prob_sum": 1e-12,          # per-class stochasticity defect
        "kernel_at_one": 1e-12,     # |P(1,1)| for a stochastic interior class
        # polynomial arithmetic
        "coeff_drop": 1e-14,        # relative trim threshold for coefficients
        "exact_div": 1e-9,          # relative remainder allowed in exact division
        # root handling
        "root_cluster": 1e-7,       # merge radius when counting multiplicities
        "on_circle": 1e-9,          # band ||root|-1| treated as "on the unit circle"
        # curve tracing
        "curve_jump": 0.1,          # root jump fraction that triggers step halving
        "curve_closure": 1e-8,      # both tracked branches must meet at cut ends
        "involution": 1e-8,         # |alpha(alpha(t)) - t| on samples
        "conjugation": 1e-7,        # |alpha(t) - conj(t)| for real cuts
        "curve_residual": 1e-8,     # |P| on curve samples (relative to coeff scale)
        "component_gap": 1e-3,      # distinct curve components must stay this far apart
        # conformal gluing
        "glue_defect": 1e-8,        # max ||w(t)|-1| over boundary samples
        "glue_agree": 1e-7,         # two independent gluing methods, same domain
        # boundary value problem solve
        "solution_stability": 1e-9, # pi(0.3) change under sample doubling
        "index_zero": 1e-6,         # winding of A(alpha)/A must vanish this exactly
        "fe_residual": 1e-7,        # functional-equation residual on a test grid
        "mass_defect": 1e-6,        # |total mass - 1| after normalisation
        "analyticity": 1e-8,        # Taylor coefficients from two extraction radii
        # oracle
        "oracle_tail": 1e-8,        # stationary mass allowed on the outer frame
        # comparisons
        "compare_coeff": 1e-5,      # analytic vs truncated-chain coefficients
        "mass_window": 1e-4,        # analytic total mass against 1
    }
)


def merged(overrides: dict | None = None) -> dict:
    """Return a fresh tolerance dict, ``DEFAULTS`` updated by ``overrides``."""
    tols = dict(DEFAULTS)
    for key, value in (overrides or {}).items():
        if key not in tols:
            raise KeyError(f"unknown tolerance key: {key!r}")
        tols[key] = float(value)
    return tols
