"""Tests for branch-point location, classification, cut pairing and genus."""

import numpy as np
import pytest

from qpwalk import (
    BivariatePolynomial,
    NumericalError,
    UnivariatePolynomial,
    assemble_functional_equation,
    branch_count_bounds,
    find_branch_points,
    genus_by_monodromy,
    genus_cross_checked,
    kernel_from_model,
    load_model,
    model_from_dict,
    pair_cuts,
    unit_circle_winding,
)
from qpwalk.kernel import discriminant

# Frozen locations for the small-step fixture, computed once and pinned; the
# model is mirror-symmetric so both planes share them.
M1_BRANCH_POINTS = [0.1777121092, 0.7487563167, 3.0745570178, 21.9989745563]


@pytest.fixture(scope="module")
def kernels(fixture_dir):
    out = {}
    for name in ("m1", "m2", "m3"):
        model = load_model(fixture_dir / f"{name}.json")
        out[name] = kernel_from_model(assemble_functional_equation(model))
    return out


def test_small_step_fixture_has_four_real_branch_points(kernels):
    for plane in ("x", "y"):
        pts = find_branch_points(kernels["m1"], plane)
        locs = [b.location for b in pts]
        assert all(abs(z.imag) < 1e-9 for z in locs)
        assert [z.real for z in locs] == pytest.approx(M1_BRANCH_POINTS, abs=1e-9)
        assert [b.region for b in pts] == ["interior", "interior", "exterior", "exterior"]
        assert all(b.multiplicity == 1 for b in pts)


@pytest.mark.parametrize(
    "name, plane, interior",
    [
        ("m1", "y", 2),
        ("m1", "x", 2),
        ("m2", "y", 4),
        ("m2", "x", 4),
        ("m3", "y", 4),
        ("m3", "x", 4),
    ],
)
def test_interior_counts_and_lemma_bounds(kernels, name, plane, interior):
    P = kernels[name]
    pts = find_branch_points(P, plane)
    assert sum(b.multiplicity for b in pts) <= branch_count_bounds(P)[plane]
    assert sum(b.multiplicity for b in pts if b.is_interior) == interior


@pytest.mark.parametrize("name", ["m1", "m2", "m3"])
@pytest.mark.parametrize("plane", ["x", "y"])
def test_winding_cross_checks_interior_count(kernels, name, plane):
    """Argument-principle count of discriminant roots inside the unit circle
    must agree with the clustered classification (independent route)."""
    P = kernels[name]
    pts = find_branch_points(P, plane)
    fiber = "x" if plane == "y" else "y"
    winding = unit_circle_winding(discriminant(P, fiber))
    assert winding == sum(b.multiplicity for b in pts if b.is_interior)


def test_branch_point_over_degenerate_fiber_is_flagged(kernels):
    pts = find_branch_points(kernels["m2"], "y")
    near_zero = min(pts, key=lambda b: abs(b.location))
    assert abs(near_zero.location) < 1e-8
    assert near_zero.pair_at_infinity


def test_zero_drift_model_raises_on_circle_branch_point():
    data = {
        "bounds": {
            "i_minus": 1, "i_plus": 1, "j_minus": 1, "j_plus": 1,
            "i_zero": 1, "j_zero": 1,
        },
        "interior": [[1, 0, 0.25], [-1, 0, 0.25], [0, 1, 0.25], [0, -1, 0.25]],
        "strips_h": [[[1, 0, 0.25], [-1, 0, 0.25], [0, 1, 0.5]]],
        "strips_v": [[[0, 1, 0.25], [0, -1, 0.25], [1, 0, 0.5]]],
        "isolated": [{"k": 0, "l": 0, "jumps": [[1, 0, 0.5], [0, 1, 0.5]]}],
    }
    P = kernel_from_model(assemble_functional_equation(model_from_dict(data)))
    with pytest.raises(NumericalError):
        find_branch_points(P, "y")
    pts = find_branch_points(P, "y", strict_circle=False)
    assert any(b.region == "boundary" for b in pts)


def test_cut_pairing_shapes(kernels):
    cuts1 = pair_cuts(find_branch_points(kernels["m1"], "y"))
    assert [(c.kind,) for c in cuts1] == [("real",)]
    assert cuts1[0].e1.real == pytest.approx(M1_BRANCH_POINTS[0])
    assert cuts1[0].e2.real == pytest.approx(M1_BRANCH_POINTS[1])

    cuts2 = pair_cuts(find_branch_points(kernels["m2"], "y"))
    assert sorted(c.kind for c in cuts2) == ["conjugate", "real"]
    real = next(c for c in cuts2 if c.kind == "real")
    assert real.pair_at_infinity == (True, False)
    conj = next(c for c in cuts2 if c.kind == "conjugate")
    assert conj.e1.conjugate() == pytest.approx(conj.e2)

    cuts3 = pair_cuts(find_branch_points(kernels["m3"], "x"))
    assert [c.kind for c in cuts3] == ["real", "real"]
    assert cuts3[0].e2.real < cuts3[1].e1.real


def test_cut_parametrization_hits_endpoints(kernels):
    cut = pair_cuts(find_branch_points(kernels["m1"], "y"))[0]
    assert cut.parametrize(0.0) == pytest.approx(cut.e2)
    assert cut.parametrize(np.pi) == pytest.approx(cut.e1)
    mid = cut.parametrize(np.pi / 2)
    assert mid == pytest.approx(cut.midpoint)


def test_unit_circle_winding_counts_enclosed_roots():
    p = UnivariatePolynomial(np.convolve([-0.5, 1.0], [-2.0, 1.0]))
    assert unit_circle_winding(p) == 1


# -- genus --------------------------------------------------------------------


def test_small_step_fixture_has_genus_one(kernels):
    gx, gy = genus_cross_checked(kernels["m1"])
    assert gx.genus == gy.genus == 1
    assert gx.transitive and gy.transitive


def test_big_jump_fixtures_have_higher_genus(kernels):
    gx2, gy2 = genus_cross_checked(kernels["m2"])
    assert gx2.genus == gy2.genus == 3
    gx3, gy3 = genus_cross_checked(kernels["m3"])
    assert gx3.genus == gy3.genus == 2


def test_hyperelliptic_curve_genus_two():
    f = np.array([1.0])
    for r in range(6):
        f = np.convolve(f, [-float(r), 1.0])
    c = np.zeros((7, 3))
    c[:, 0] = -f
    c[0, 2] = 1.0
    report = genus_by_monodromy(BivariatePolynomial(c), "y")
    assert report.genus == 2
    assert report.total_ramification == 6
    assert report.transitive


def test_repeated_factor_kernel_is_rejected():
    q = BivariatePolynomial([[-1.0, 1.0], [1.0, 0.0]])  # x + y - 1
    squared = q * q
    with pytest.raises(NumericalError):
        genus_by_monodromy(squared, "x")


def test_reducible_kernel_reports_intransitive_monodromy():
    # (x - y)(x - 2y - 1): two disjoint degree-one sheets in x
    a = BivariatePolynomial([[0.0, -1.0], [1.0, 0.0]])
    b = BivariatePolynomial([[-1.0, -2.0], [1.0, 0.0]])
    report = genus_by_monodromy(a * b, "x")
    assert not report.transitive
