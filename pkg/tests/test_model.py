"""Tests for model definition, validation, classification and serialization."""

import json

import numpy as np
import pytest

from qpwalk import (
    JumpBounds,
    ModelError,
    StepDistribution,
    assemble_functional_equation,
    classify_state,
    isolated_points,
    load_model,
    model_from_dict,
    model_to_dict,
    save_model,
    validate_model,
)

FIXTURES = ["m1", "m2", "m3"]


@pytest.fixture(scope="module")
def fixture_models(fixture_dir):
    return {name: load_model(fixture_dir / f"{name}.json") for name in FIXTURES}


# -- bounds and classification ----------------------------------------------


def test_bounds_reject_nonpositive_jumps():
    with pytest.raises(ValueError):
        JumpBounds(i_minus=0, i_plus=1, j_minus=1, j_plus=1, i_zero=1, j_zero=1)


def test_bounds_reject_axis_reach_smaller_than_interior_reach():
    with pytest.raises(ValueError):
        JumpBounds(i_minus=2, i_plus=1, j_minus=1, j_plus=1, i_zero=1, j_zero=1)


def test_classification_partitions_quadrant_window():
    bounds = JumpBounds(i_minus=2, i_plus=1, j_minus=2, j_plus=1, i_zero=3, j_zero=3)
    kinds = {"interior": 0, "h_strip": 0, "v_strip": 0, "point": 0}
    seen = set()
    for i in range(50):
        for j in range(50):
            cls = classify_state(bounds, i, j)
            kinds[cls.kind] += 1
            seen.add(cls)
    # Every state lands in exactly one class and all expected classes occur:
    # 1 interior + (j_minus - 1 + 1) horizontal strips + symmetric vertical
    # strips + isolated points near the corner.
    assert kinds["interior"] == 48 * 48
    assert sum(1 for c in seen if c.kind == "h_strip") == 2
    assert sum(1 for c in seen if c.kind == "v_strip") == 2
    assert sum(1 for c in seen if c.kind == "point") == 6
    assert len(seen) == 11


def test_isolated_point_set_matches_threshold_geometry():
    bounds = JumpBounds(i_minus=2, i_plus=1, j_minus=2, j_plus=1, i_zero=3, j_zero=3)
    pts = isolated_points(bounds)
    assert set(pts) == {(0, 0), (1, 0), (2, 0), (0, 1), (1, 1), (0, 2)}


def test_classify_state_rejects_negative_coordinates():
    bounds = JumpBounds(i_minus=1, i_plus=1, j_minus=1, j_plus=1, i_zero=1, j_zero=1)
    with pytest.raises(ValueError):
        classify_state(bounds, -1, 0)


# -- step distributions -------------------------------------------------------


def test_step_distribution_rejects_duplicate_jumps():
    with pytest.raises(ValueError):
        StepDistribution.from_mapping([(1, 0, 0.5), (1, 0, 0.5)])


def test_step_distribution_drift():
    dist = StepDistribution.from_mapping({(1, 0): 0.75, (-1, 0): 0.25})
    dx, dy = dist.drift()
    assert dx == pytest.approx(0.5)
    assert dy == pytest.approx(0.0)


# -- validation ---------------------------------------------------------------


@pytest.mark.parametrize("name", FIXTURES)
def test_fixture_models_validate_cleanly(fixture_models, name):
    report = validate_model(fixture_models[name])
    assert report.errors == []
    assert report.warnings == []


def test_validation_flags_probability_sum(fixture_models):
    data = model_to_dict(fixture_models["m1"])
    data["interior"][0][2] += 0.25
    model = model_from_dict(data)
    report = validate_model(model)
    assert any("sum" in e for e in report.errors)


def test_validation_flags_quadrant_exit(fixture_models):
    data = model_to_dict(fixture_models["m1"])
    # a south jump from the wall row walks out of the quadrant
    data["strips_h"][0] = [[0, -1, 0.5], [0, 1, 0.5]]
    model = model_from_dict(data)
    report = validate_model(model)
    assert any("exits the quadrant" in e for e in report.errors)


def test_validation_warns_on_nonnegative_drift(fixture_models):
    data = model_to_dict(fixture_models["m1"])
    data["interior"] = [[1, 0, 0.4], [0, 1, 0.4], [-1, 0, 0.1], [0, -1, 0.1]]
    model = model_from_dict(data)
    report = validate_model(model)
    assert report.errors == []
    assert any("drift" in w for w in report.warnings)


def test_raise_if_failed_wraps_errors_in_model_error(fixture_models):
    data = model_to_dict(fixture_models["m1"])
    data["interior"][0][2] += 0.25
    report = validate_model(model_from_dict(data))
    with pytest.raises(ModelError):
        report.raise_if_failed()


# -- serialization ------------------------------------------------------------


@pytest.mark.parametrize("name", FIXTURES)
def test_json_round_trip_is_bitwise_stable(fixture_models, tmp_path, name):
    model = fixture_models[name]
    path1 = tmp_path / "a.json"
    path2 = tmp_path / "b.json"
    save_model(model, path1)
    reloaded = load_model(path1)
    save_model(reloaded, path2)
    assert path1.read_bytes() == path2.read_bytes()
    assert model_to_dict(reloaded) == model_to_dict(model)


def test_model_from_dict_rejects_missing_sections():
    with pytest.raises(ModelError):
        model_from_dict({"bounds": {}})


def test_model_from_dict_rejects_malformed_jump_triples(fixture_models):
    data = model_to_dict(fixture_models["m1"])
    data["interior"][0] = [1, 0]
    with pytest.raises(ModelError):
        model_from_dict(data)


# -- functional equation ------------------------------------------------------


@pytest.mark.parametrize("name", FIXTURES)
def test_kernel_vanishes_at_one_one(fixture_models, name):
    fe = assemble_functional_equation(fixture_models[name])
    assert abs(fe.kernel()(1.0, 1.0)) < 1e-12


@pytest.mark.parametrize("name", FIXTURES)
def test_class_generators_match_laurent_form(fixture_models, name):
    fe = assemble_functional_equation(fixture_models[name])
    sx, sy = fe.monomial_shift
    rng = np.random.default_rng(7)
    pts = rng.uniform(0.5, 1.5, size=(4, 2)) * np.exp(
        1j * rng.uniform(0, 2 * np.pi, size=(4, 2))
    )
    for cls, gen in fe.class_gens.items():
        laurent = fe.laurent_gen(cls)
        for x, y in pts:
            lhs = gen(x, y)
            rhs = x**sx * y**sy * laurent(x, y)
            assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


def test_equation_carries_expected_unknowns(fixture_models):
    fe = assemble_functional_equation(fixture_models["m3"])
    axes = sorted((u.axis, u.index) for u in fe.unknown_functions)
    # one function per horizontal strip row and per vertical strip column
    assert axes == [("x", 0), ("y", 0), ("y", 1)]
    assert len(fe.unknown_scalars) == 2


def test_assemble_rejects_invalid_model(fixture_models):
    data = model_to_dict(fixture_models["m1"])
    data["interior"][0][2] += 0.25
    with pytest.raises(ModelError):
        assemble_functional_equation(model_from_dict(data))


def test_class_generator_matches_direct_transition_sum(fixture_models):
    model = fixture_models["m1"]
    fe = assemble_functional_equation(model)
    x, y = 0.6 + 0.2j, 0.4 - 0.1j
    for cls in model.classes():
        gen = fe.laurent_gen(cls)
        dist = model.distribution(cls)
        direct = -1.0 + sum(p * x**di * y**dj for (di, dj, p) in dist.jumps)
        assert gen(x, y) == pytest.approx(direct, rel=1e-12)
