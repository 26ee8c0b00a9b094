"""Tests for the disk maps: Szego-kernel route, Theodorsen route, utilities."""

import numpy as np
import pytest

from qpwalk import (
    NumericalError,
    assemble_functional_equation,
    kernel_from_model,
    load_model,
)
from qpwalk.branch import find_branch_points, pair_cuts
from qpwalk.conformal import (
    conjugate_periodic,
    disk_map_from_trace,
    szego_disk_map,
    szego_theodorsen_agreement,
    theodorsen_correspondence,
    trig_interp,
)
from qpwalk.curve import validate_cut
from qpwalk.tolerances import DEFAULTS


def _grid(n):
    return 2.0 * np.pi * np.arange(n) / n


def _fixture_kernel(fixture_dir, name):
    model = load_model(fixture_dir / f"{name}.json")
    return kernel_from_model(assemble_functional_equation(model))


def _real_cut_trace(P, plane, index=0):
    cuts = [c for c in pair_cuts(find_branch_points(P, plane)) if c.kind == "real"]
    trace, report = validate_cut(P, cuts[index])
    return trace


class TestFourierHelpers:
    def test_conjugate_of_cosine_is_sine(self):
        t = _grid(128)
        for k in (1, 3, 7):
            assert np.allclose(conjugate_periodic(np.cos(k * t)), np.sin(k * t))
            assert np.allclose(conjugate_periodic(np.sin(k * t)), -np.cos(k * t))

    def test_trig_interp_reproduces_band_limited_data(self):
        t = _grid(64)
        rng = np.random.default_rng(3)
        coef = rng.standard_normal(5)
        f = lambda s: (
            coef[0]
            + coef[1] * np.cos(s)
            + coef[2] * np.sin(2 * s)
            + coef[3] * np.cos(5 * s)
            + coef[4] * np.sin(9 * s)
        )
        s_new = rng.uniform(0.0, 2.0 * np.pi, size=40)
        err = np.max(np.abs(trig_interp(f(t), s_new).real - f(s_new)))
        assert err < 1e-12


class TestKnownDomains:
    def test_offset_disk_is_mapped_linearly(self):
        n = 256
        t = _grid(n)
        c0, radius = 0.3 + 0.2j, 1.7
        z = c0 + radius * np.exp(1j * t)
        dz = 1j * radius * np.exp(1j * t)
        m = szego_disk_map(z, dz, c0)
        assert np.max(np.abs(m.boundary_values() - np.exp(1j * t))) < 1e-13
        pts = c0 + radius * np.array([0.2, -0.5j, 0.9 + 0.3j])
        assert np.max(np.abs(m(pts) - (pts - c0) / radius)) < 1e-12
        assert m.derivative_at_center() == pytest.approx(1.0 / radius, abs=1e-13)
        assert m.defect() < 1e-13

    def test_disk_with_off_center_base_point_gives_blaschke_factor(self):
        n = 256
        t = _grid(n)
        c0, radius = 0.3 + 0.2j, 1.7
        z = c0 + radius * np.exp(1j * t)
        dz = 1j * radius * np.exp(1j * t)
        a = c0 + 0.4 * radius
        m = szego_disk_map(z, dz, a)
        al = (a - c0) / radius
        zz = (z - c0) / radius
        blaschke = (zz - al) / (1.0 - np.conj(al) * zz)
        assert np.max(np.abs(m.boundary_values() - blaschke)) < 1e-13

    def test_ellipse_defect_and_normalization(self):
        n = 256
        t = _grid(n)
        z = 1.2 * np.cos(t) + 0.8j * np.sin(t)
        dz = -1.2 * np.sin(t) + 0.8j * np.cos(t)
        m = szego_disk_map(z, dz, 0.0)
        assert m.defect() < DEFAULTS["glue_defect"]
        assert abs(m(0.0)) < 1e-12
        assert m.derivative_at_center() > 0.0

    def test_two_construction_routes_agree_on_ellipse(self):
        n = 256
        t = _grid(n)
        z = 1.2 * np.cos(t) + 0.8j * np.sin(t)
        dz = -1.2 * np.sin(t) + 0.8j * np.cos(t)
        m = szego_disk_map(z, dz, 0.0)

        def radius(phi):
            return 1.2 * 0.8 / np.sqrt(
                (0.8 * np.cos(phi)) ** 2 + (1.2 * np.sin(phi)) ** 2
            )

        assert szego_theodorsen_agreement(m, radius) < DEFAULTS["glue_agree"]

    def test_center_outside_rejected(self):
        n = 128
        t = _grid(n)
        z = np.exp(1j * t)
        dz = 1j * np.exp(1j * t)
        with pytest.raises(NumericalError, match="interior"):
            szego_disk_map(z, dz, 3.0)

    def test_theodorsen_reports_nonconvergence(self):
        def radius(phi):
            return 1.0 + 0.9 * np.cos(phi)

        with pytest.raises(NumericalError, match="Theodorsen"):
            theodorsen_correspondence(radius, n=256, max_iter=60)


class TestTracedCurves:
    def test_small_step_loop_glues(self, fixture_dir):
        P = _fixture_kernel(fixture_dir, "m1")
        trace = _real_cut_trace(P, "y")
        m = disk_map_from_trace(trace)
        assert m.defect() < DEFAULTS["glue_defect"]
        assert np.max(np.abs(np.abs(m.boundary_values()) - 1.0)) < 1e-14
        assert np.all(m.phase_derivative_at(m.t) > 0.0)

    def test_angle_inversion_round_trip(self, fixture_dir):
        P = _fixture_kernel(fixture_dir, "m1")
        trace = _real_cut_trace(P, "y")
        m = disk_map_from_trace(trace)
        angles = _grid(17) + 0.123
        ts = m.parameter_of_angle(angles)
        err = np.max(np.abs(np.angle(np.exp(1j * (m.phase_at(ts) - angles)))))
        assert err < 1e-12

    def test_unbounded_loop_glues_in_chart(self, fixture_dir):
        P = _fixture_kernel(fixture_dir, "m2")
        trace = _real_cut_trace(P, "y")
        assert trace.chart_center is not None
        m = disk_map_from_trace(trace)
        assert m.defect() < DEFAULTS["glue_defect"]

    def test_wide_jump_loops_glue(self, fixture_dir):
        P = _fixture_kernel(fixture_dir, "m3")
        for index in (0, 1):
            trace = _real_cut_trace(P, "x", index)
            m = disk_map_from_trace(trace)
            assert m.defect() < DEFAULTS["glue_defect"]
