"""Tests for tracing closed loops over cuts and validating their contracts."""

import json

import numpy as np
import pytest

from qpwalk import (
    NumericalError,
    assemble_functional_equation,
    kernel_from_model,
    load_model,
    model_from_dict,
)
from qpwalk.branch import find_branch_points, pair_cuts
from qpwalk.curve import (
    automorphism_at,
    component_separation,
    curve_metrics,
    curve_validated_branch_points,
    encloses,
    implicit_tangent,
    spectral_tangent,
    trace_curve,
    validate_cut,
    validated_cuts,
    winding_number,
)
from qpwalk.tolerances import DEFAULTS

# Loop point over the finite collision endpoint of the unbounded loop of the
# big-jump fixture, frozen from the converged tracer.
M2_FINITE_FIXED_POINT = 1.1896368113

# A walk with only axis-parallel interior jumps has x_plus * x_minus constant
# over the cut, so its loop is the circle of radius sqrt(w_west / w_east).
AXIS_WALK = {
    "bounds": {
        "i_minus": 1,
        "i_plus": 1,
        "j_minus": 1,
        "j_plus": 1,
        "i_zero": 1,
        "j_zero": 1,
    },
    "interior": [[1, 0, 0.2], [-1, 0, 0.3], [0, 1, 0.2], [0, -1, 0.3]],
    "strips_h": [[[-1, 0, 0.3], [1, 0, 0.3], [0, 1, 0.4]]],
    "strips_v": [[[0, -1, 0.3], [0, 1, 0.3], [1, 0, 0.4]]],
    "isolated": [{"k": 0, "l": 0, "jumps": [[1, 0, 0.5], [0, 1, 0.5]]}],
}


def _kernel(fixture_dir, name):
    model = load_model(fixture_dir / f"{name}.json")
    return kernel_from_model(assemble_functional_equation(model))


def _interior_cuts(P, plane):
    return pair_cuts(find_branch_points(P, plane))


@pytest.fixture(scope="module")
def kernels(fixture_dir):
    return {name: _kernel(fixture_dir, name) for name in ("m1", "m2", "m3")}


class TestTraceSmallSteps:
    def test_interior_cut_contracts(self, kernels):
        cut = _interior_cuts(kernels["m1"], "y")[0]
        trace, report = validate_cut(kernels["m1"], cut)
        assert trace.chart_center is None
        assert report.closure_defect < DEFAULTS["curve_closure"]
        assert report.involution_defect < DEFAULTS["involution"]
        assert report.conjugation_defect < DEFAULTS["conjugation"]
        assert report.kernel_residual < DEFAULTS["curve_residual"]
        assert report.jordan

    def test_mirror_symmetry_of_samples(self, kernels):
        cut = _interior_cuts(kernels["m1"], "y")[0]
        trace = trace_curve(kernels["m1"], cut)
        mirrored = np.concatenate([trace.chart[:1], trace.chart[:0:-1]])
        assert np.max(np.abs(np.conj(trace.chart) - mirrored)) < 1e-10

    def test_two_disjoint_components(self, kernels):
        P = kernels["m1"]
        points = find_branch_points(P, "y")
        inner, _ = validate_cut(P, pair_cuts(points)[0])
        outer, _ = validate_cut(P, pair_cuts(points, region="exterior")[0])
        assert component_separation(inner, outer) > DEFAULTS["component_gap"]
        assert component_separation(inner, outer) == pytest.approx(0.7355, abs=1e-3)

    def test_involution_partner_matches_mirror(self, kernels):
        cut = _interior_cuts(kernels["m1"], "y")[0]
        trace = trace_curve(kernels["m1"], cut)
        k = trace.size // 5
        partner = automorphism_at(trace, trace.chart[k])
        assert partner == pytest.approx(trace.chart[trace.mirror_index(k)], abs=1e-10)
        assert automorphism_at(trace, partner) == pytest.approx(
            trace.chart[k], abs=1e-10
        )

    def test_tangent_routes_agree(self, kernels):
        cut = _interior_cuts(kernels["m1"], "y")[0]
        trace = trace_curve(kernels["m1"], cut)
        spectral = spectral_tangent(trace)
        implicit = implicit_tangent(trace)
        guard = trace.size // 16
        half = trace.size // 2
        keep = np.ones(trace.size, dtype=bool)
        for end in (0, half):
            keep[(np.arange(trace.size) - end) % trace.size < guard] = False
            keep[(end - np.arange(trace.size)) % trace.size < guard] = False
        err = np.abs(spectral[keep] - implicit[keep]) / (1.0 + np.abs(spectral[keep]))
        assert np.max(err) < 1e-8

    def test_winding_and_enclosure(self, kernels):
        cut = _interior_cuts(kernels["m1"], "y")[0]
        trace = trace_curve(kernels["m1"], cut)
        assert winding_number(trace, complex(trace.chart.mean())) == 1
        assert encloses(trace, 0.0)
        assert not encloses(trace, 100.0)

    def test_sample_count_validation(self, kernels):
        cut = _interior_cuts(kernels["m1"], "y")[0]
        with pytest.raises(ValueError):
            trace_curve(kernels["m1"], cut, samples=511)
        with pytest.raises(ValueError):
            trace_curve(kernels["m1"], cut, samples=8)


class TestAxisWalkCircle:
    def test_loop_is_a_circle(self):
        P = kernel_from_model(
            assemble_functional_equation(model_from_dict(AXIS_WALK))
        )
        cut = _interior_cuts(P, "y")[0]
        trace, report = validate_cut(P, cut)
        radius = np.sqrt(0.3 / 0.2)
        assert np.max(np.abs(np.abs(trace.chart) - radius)) < 1e-9
        assert report.within()


class TestTraceBigJumps:
    def test_unbounded_loop_traced_in_chart(self, kernels):
        P = kernels["m2"]
        cut = [c for c in _interior_cuts(P, "y") if c.kind == "real"][0]
        assert any(cut.pair_at_infinity)
        trace, report = validate_cut(P, cut)
        assert trace.chart_center is not None
        assert report.within()
        over_e2, over_e1 = trace.fixed_points()
        assert over_e2 == pytest.approx(M2_FINITE_FIXED_POINT, abs=1e-8)
        assert np.max(np.abs(trace.samples[np.isfinite(trace.samples)])) > 1e6

    def test_unbounded_loop_has_vertical_asymptote(self, kernels):
        P = kernels["m2"]
        cut = [c for c in _interior_cuts(P, "y") if c.kind == "real"][0]
        trace = trace_curve(P, cut)
        x = trace.samples
        far = x[np.isfinite(x) & (np.abs(x.imag) > 50.0)]
        assert len(far) > 0
        assert np.max(np.abs(far.real - 0.4)) < 0.05

    def test_identity_chart_cannot_satisfy_contracts(self, kernels):
        P = kernels["m2"]
        cut = [c for c in _interior_cuts(P, "y") if c.kind == "real"][0]
        try:
            trace = trace_curve(P, cut, chart_center=None)
        except NumericalError:
            return
        assert not curve_metrics(trace).within()

    def test_conjugate_cut_pair_exchanges_sheets(self, kernels):
        P = kernels["m2"]
        cut = [c for c in _interior_cuts(P, "y") if c.kind == "conjugate"][0]
        with pytest.raises(NumericalError, match="re-collide"):
            trace_curve(P, cut)


class TestTraceWideHorizontalJumps:
    def test_both_real_cuts_validate(self, kernels):
        P = kernels["m3"]
        accepted = validated_cuts(P, "x")
        assert len(accepted) == 2
        for cut, trace, report in accepted:
            assert cut.kind == "real"
            assert trace.plane == "y"
            assert report.within()

    def test_vertical_plane_keeps_only_real_cut(self, kernels):
        P = kernels["m3"]
        accepted = validated_cuts(P, "y")
        assert len(accepted) == 1
        assert accepted[0][0].kind == "real"

    def test_conjugate_cut_rejected(self, kernels):
        P = kernels["m3"]
        cut = [c for c in _interior_cuts(P, "y") if c.kind == "conjugate"][0]
        with pytest.raises(NumericalError, match="re-collide"):
            trace_curve(P, cut)


class TestValidatedCounts:
    @pytest.mark.parametrize(
        ("name", "plane", "count"),
        [
            ("m1", "y", 2),
            ("m1", "x", 2),
            ("m2", "y", 2),
            ("m3", "y", 2),
            ("m3", "x", 4),
        ],
    )
    def test_counts(self, kernels, name, plane, count):
        assert len(curve_validated_branch_points(kernels[name], plane)) == count


class TestMetricsCatchCorruption:
    def test_perturbed_samples_fail_contracts(self, kernels):
        cut = _interior_cuts(kernels["m1"], "y")[0]
        trace = trace_curve(kernels["m1"], cut)
        trace.chart[trace.size // 3] += 1e-4
        report = curve_metrics(trace)
        assert not report.within()
        assert report.kernel_residual > DEFAULTS["curve_residual"]
