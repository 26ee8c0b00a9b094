"""Tests for polynomial arithmetic, resultants and discriminants."""

import numpy as np
import pytest

from qpwalk import (
    BivariatePolynomial,
    NumericalError,
    UnivariatePolynomial,
    assemble_functional_equation,
    cluster_roots,
    kernel_from_model,
    load_model,
)
from qpwalk.kernel import (
    _resultant_exact,
    discriminant,
    resultant,
    sylvester_matrix,
)


@pytest.fixture(scope="module")
def kernels(fixture_dir):
    out = {}
    for name in ("m1", "m2", "m3"):
        model = load_model(fixture_dir / f"{name}.json")
        out[name] = kernel_from_model(assemble_functional_equation(model))
    return out


# -- univariate ---------------------------------------------------------------


def test_univariate_arithmetic_and_degree():
    p = UnivariatePolynomial([1.0, 2.0, 1.0])  # (1+x)^2
    q = UnivariatePolynomial([-1.0, 1.0])  # x - 1
    assert (p * q).degree == 3
    assert (p + q).coeffs == pytest.approx([0.0, 3.0, 1.0])
    assert (p - p).is_zero
    assert p(2.0) == pytest.approx(9.0)


def test_univariate_trim_drops_float_dust():
    p = UnivariatePolynomial([1.0, 1.0, 1e-18])
    assert p.degree == 1


def test_roots_of_cubic_with_known_zeros():
    # (x-1)(x-2)(x+3) = x^3 - 7x + 6
    p = UnivariatePolynomial([6.0, -7.0, 0.0, 1.0])
    roots = np.sort_complex(p.roots())
    assert roots == pytest.approx([-3.0, 1.0, 2.0], abs=1e-12)


def test_reversed_swaps_root_to_reciprocal():
    p = UnivariatePolynomial([-2.0, 1.0])  # root 2
    assert p.reversed().roots() == pytest.approx([0.5])


def test_exact_div_recovers_factor():
    p = UnivariatePolynomial([-2.0, 1.0]) * UnivariatePolynomial([3.0, 0.0, 1.0])
    q = p.exact_div(UnivariatePolynomial([-2.0, 1.0]))
    assert q.coeffs == pytest.approx([3.0, 0.0, 1.0])


def test_exact_div_raises_on_inexact_division():
    p = UnivariatePolynomial([1.0, 1.0, 1.0])
    with pytest.raises(NumericalError):
        p.exact_div(UnivariatePolynomial([-2.0, 1.0]))


def test_cluster_roots_merges_multiple_root():
    roots = np.array([1.0, 1.0 + 5e-9, 1.0 - 5e-9j, -2.0])
    clusters = cluster_roots(roots, radius=1e-7)
    assert [(round(c.real, 6), m) for c, m in clusters] == [(-2.0, 1), (1.0, 3)]


# -- bivariate ----------------------------------------------------------------


def test_bivariate_evaluation_matches_naive_sum():
    rng = np.random.default_rng(3)
    c = rng.standard_normal((4, 3))
    p = BivariatePolynomial(c)
    x, y = 0.7 - 0.3j, -0.2 + 0.5j
    naive = sum(
        c[i, j] * x**i * y**j for i in range(c.shape[0]) for j in range(c.shape[1])
    )
    assert p(x, y) == pytest.approx(naive, rel=1e-13)


def test_bivariate_product_and_partial_degrees():
    p = BivariatePolynomial([[0.0, 1.0], [1.0, 0.0]])  # x + y
    q = p * p
    assert (q.deg_x, q.deg_y) == (2, 2)
    assert q.partial("x")(0.5, 0.25) == pytest.approx(2 * (0.5 + 0.25))


def test_fiber_restriction_agrees_with_evaluation():
    p = BivariatePolynomial([[1.0, 0.0, 2.0], [0.0, -1.0, 0.0], [3.0, 0.0, 0.0]])
    f = p.fiber("y", 0.5 + 0.1j)
    assert f(1.3) == pytest.approx(p(1.3, 0.5 + 0.1j))
    g = p.fiber("x", -0.4)
    assert g(0.9) == pytest.approx(p(-0.4, 0.9))


def test_swapped_exchanges_variables():
    p = BivariatePolynomial([[0.0, 2.0], [1.0, 0.0]])  # 2y + x
    assert p.swapped()(0.3, 0.7) == pytest.approx(p(0.7, 0.3))


# -- resultants ---------------------------------------------------------------


def test_resultant_of_classic_pair():
    # res_x(x^2 - y, x - y) = y^2 - y, up to sign
    p = BivariatePolynomial([[0.0, -1.0], [0.0, 0.0], [1.0, 0.0]])
    q = BivariatePolynomial([[0.0, -1.0], [1.0, 0.0]])
    r = resultant(p, q, eliminate="x")
    roots = np.sort_complex(r.roots())
    assert roots == pytest.approx([0.0, 1.0], abs=1e-12)


def test_resultant_vanishes_iff_common_root():
    p = BivariatePolynomial([[0.0, -1.0], [0.0, 0.0], [1.0, 0.0]])  # x^2 - y
    q = BivariatePolynomial([[-1.0], [0.0], [1.0]])  # x^2 - 1
    r = resultant(p, q, eliminate="x")
    # common root of the two fibers exists exactly at y = 1
    assert abs(r(1.0)) < 1e-12
    assert abs(r(0.5)) > 1e-3


def test_float_and_exact_elimination_agree(kernels):
    P = kernels["m1"]
    M = sylvester_matrix(P, P.partial("x"), "x")
    exact = _resultant_exact([row[:] for row in M]).coeffs
    from qpwalk.kernel import _resultant_float

    fast = _resultant_float([row[:] for row in M]).coeffs
    assert fast == pytest.approx(exact, rel=1e-10)


def test_discriminant_matches_quadratic_formula(kernels):
    P = kernels["m1"]
    b = P.coeffs_in("y")
    hand = b[1] * b[1] - 4.0 * (b[2] * b[0])
    auto = discriminant(P, "y")
    assert auto.degree == hand.degree
    assert auto.coeffs == pytest.approx(hand.coeffs, rel=1e-10)


def test_discriminant_of_hyperelliptic_curve_recovers_branch_locus():
    # y^2 - f(x) with f = x(x-1)...(x-5): disc_y = 4 f, branch locus {0..5}
    f = np.array([1.0])
    for r in range(6):
        f = np.convolve(f, [-float(r), 1.0])
    c = np.zeros((7, 3))
    c[:, 0] = -f
    c[0, 2] = 1.0
    curve = BivariatePolynomial(c)
    d = discriminant(curve, "y")
    roots = np.sort_complex(d.roots())
    assert roots == pytest.approx(np.arange(6.0), abs=1e-8)


def test_discriminant_survives_float_breakdown_on_wide_kernel(kernels):
    # this kernel needs the exact-arithmetic fallback; degree must match the
    # eliminated-variable theory bound 2*J*(I-1) minus the leading-root drop
    d = discriminant(kernels["m3"], "x")
    assert d.degree == 7
    assert np.isfinite(d.coeffs).all()


def test_kernel_degrees_and_unit_value(kernels):
    for name, want in (("m1", (2, 2)), ("m2", (3, 3)), ("m3", (3, 2))):
        P = kernels[name]
        assert (P.deg_x, P.deg_y) == want
        assert abs(P(1.0, 1.0)) < 1e-12
