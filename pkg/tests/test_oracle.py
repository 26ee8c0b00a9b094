"""Tests for the brute-force oracles (truncated chain, Monte Carlo, sweep)."""

import numpy as np
import pytest

from qpwalk import (
    NumericalError,
    assemble_functional_equation,
    find_branch_points,
    kernel_from_model,
    load_model,
    model_from_dict,
    model_to_dict,
)
from qpwalk.oracle import (
    monte_carlo_occupancy,
    sweep_branch_points,
    transition_matrix,
    truncated_stationary,
)

# Frozen corner value of the small-step fixture's stationary distribution,
# obtained from the truncated solve and stable to the displayed digits under
# doubling of the truncation.
M1_PI00 = 0.1387068338


@pytest.fixture(scope="module")
def models(fixture_dir):
    return {n: load_model(fixture_dir / f"{n}.json") for n in ("m1", "m2", "m3")}


@pytest.fixture(scope="module")
def m1_oracle(models):
    return truncated_stationary(models["m1"], truncation=120)


def test_transition_rows_are_stochastic(models):
    P = transition_matrix(models["m3"], 40)
    sums = np.asarray(P.sum(axis=1)).ravel()
    assert np.abs(sums - 1.0).max() < 1e-12


def test_truncated_solve_matches_frozen_value(m1_oracle):
    assert m1_oracle.pi[0, 0] == pytest.approx(M1_PI00, abs=1e-9)
    assert m1_oracle.pi.sum() == pytest.approx(1.0, abs=1e-12)
    assert m1_oracle.tail_mass < 1e-12


def test_truncated_solve_respects_mirror_symmetry(m1_oracle):
    # the fixture is invariant under swapping the two coordinates
    block = m1_oracle.block(40)
    assert np.abs(block - block.T).max() < 1e-13


def test_truncation_invariance(models, m1_oracle):
    other = truncated_stationary(models["m1"], truncation=60)
    assert np.abs(other.block(30) - m1_oracle.block(30)).max() < 1e-13


def test_functional_equation_residual_with_oracle_mass(models, m1_oracle):
    """Dual-route consistency: the assembled equation annihilates the
    oracle-computed stationary generating functions."""
    from qpwalk import classify_state

    model = models["m1"]
    fe = assemble_functional_equation(model)
    pi = m1_oracle.pi
    n = m1_oracle.truncation
    ii, jj = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    masks = {cls: np.zeros((n, n), dtype=bool) for cls in model.classes()}
    for i in range(n):
        for j in range(n):
            masks[classify_state(model, i, j)][i, j] = True
    for x, y in [(0.5, 0.5), (0.6 + 0.2j, 0.3 - 0.4j), (-0.55, 0.35j)]:
        monomials = x**ii * y**jj
        total = 0.0
        for cls, mask in masks.items():
            series = (pi * monomials)[mask].sum()
            total += fe.laurent_gen(cls)(x, y) * series
        assert abs(total) < 1e-10


def test_tail_guard_fires_for_marginally_stable_model(models):
    data = model_to_dict(models["m1"])
    data["interior"] = [[1, 0, 0.24], [-1, 0, 0.26], [0, 1, 0.24], [0, -1, 0.26]]
    slow = model_from_dict(data)
    with pytest.raises(NumericalError):
        truncated_stationary(slow, truncation=40)


def test_monte_carlo_agrees_with_truncated_solve(models, m1_oracle):
    mc = monte_carlo_occupancy(models["m1"], n_samples=1 << 19, seed=42)
    got = mc.pi[:4, :4]
    want = m1_oracle.pi[:4, :4] / m1_oracle.pi[: mc.window, : mc.window].sum()
    assert np.abs(got - want).max() < 2e-3


def test_monte_carlo_is_deterministic_per_seed(models):
    a = monte_carlo_occupancy(models["m1"], n_samples=1 << 14, seed=7)
    b = monte_carlo_occupancy(models["m1"], n_samples=1 << 14, seed=7)
    c = monte_carlo_occupancy(models["m1"], n_samples=1 << 14, seed=8)
    assert np.array_equal(a.counts, b.counts)
    assert not np.array_equal(a.counts, c.counts)


def _match_sets(a, b, tol=1e-6):
    if len(a) != len(b):
        return False
    b = list(b)
    for z in a:
        hit = next((w for w in b if abs(z - w) <= tol * (1.0 + abs(z))), None)
        if hit is None:
            return False
        b.remove(hit)
    return True


@pytest.mark.parametrize(
    "name, plane",
    [("m1", "y"), ("m2", "y"), ("m3", "y"), ("m3", "x")],
)
def test_sweep_rediscovers_interior_branch_points(models, name, plane):
    """The resultant-free sweep agrees with the discriminant route, including
    collisions at infinity and tightly spaced pairs."""
    P = kernel_from_model(assemble_functional_equation(models[name]))
    swept = sweep_branch_points(P, plane, radius=1.0, grid=41)
    expected = [b.location for b in find_branch_points(P, plane) if b.is_interior]
    assert _match_sets(swept, expected)
