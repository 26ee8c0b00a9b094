"""Dense polynomial arithmetic for kernel manipulation.

Univariate polynomials are stored as ascending coefficient arrays, bivariate
ones as a matrix ``c[i, j]`` holding the coefficient of ``x**i * y**j``.
Everything is float/complex based; coefficients whose magnitude falls below a
relative drop threshold are trimmed so that degrees stay honest after
arithmetic.

Resultants are computed from the Sylvester matrix by fraction-free (Bareiss)
elimination over the coefficient ring, which keeps intermediate entries
polynomial and avoids the instability of naive polynomial Gaussian
elimination.  Root finding goes through the companion matrix and is polished
with a fixed number of Newton steps.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import NumericalError
from .tolerances import DEFAULTS

COEFF_DROP = DEFAULTS["coeff_drop"]
EXACT_DIV_TOL = DEFAULTS["exact_div"]
NEWTON_STEPS = 3


def _trim1(c: np.ndarray, drop_tol: float = COEFF_DROP) -> np.ndarray:
    """Drop trailing coefficients below ``drop_tol`` relative to the largest."""
    c = np.atleast_1d(np.asarray(c))
    if c.size == 0:
        return np.zeros(1, dtype=c.dtype if c.dtype.kind in "fc" else float)
    scale = np.max(np.abs(c))
    if scale == 0.0:
        return c[:1] * 0
    keep = np.nonzero(np.abs(c) > drop_tol * scale)[0]
    if keep.size == 0:
        return c[:1] * 0
    return c[: keep[-1] + 1]


class UnivariatePolynomial:
    """Polynomial in one variable, ascending coefficients."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs, trim: bool = True):
        c = np.asarray(coeffs)
        if c.dtype.kind not in "fc":
            c = c.astype(float)
        self.coeffs = _trim1(c) if trim else np.atleast_1d(c)

    # -- structure ---------------------------------------------------------
    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return self.degree == 0 and self.coeffs[0] == 0

    def leading(self):
        return self.coeffs[-1]

    def scale(self) -> float:
        return float(np.max(np.abs(self.coeffs)))

    def __repr__(self):
        return f"UnivariatePolynomial(degree={self.degree})"

    # -- arithmetic --------------------------------------------------------
    def __call__(self, z):
        return npoly.polyval(np.asarray(z), self.coeffs)

    def __add__(self, other):
        a, b = self.coeffs, _as_coeffs(other)
        n = max(len(a), len(b))
        out = np.zeros(n, dtype=np.result_type(a, b))
        out[: len(a)] += a
        out[: len(b)] += b
        return UnivariatePolynomial(out)

    __radd__ = __add__

    def __neg__(self):
        return UnivariatePolynomial(-self.coeffs, trim=False)

    def __sub__(self, other):
        return self + (-UnivariatePolynomial(_as_coeffs(other), trim=False))

    def __rsub__(self, other):
        return UnivariatePolynomial(_as_coeffs(other), trim=False) - self

    def __mul__(self, other):
        b = _as_coeffs(other)
        if len(b) == 1:
            return UnivariatePolynomial(self.coeffs * b[0])
        return UnivariatePolynomial(np.convolve(self.coeffs, b))

    __rmul__ = __mul__

    def derivative(self) -> "UnivariatePolynomial":
        if self.degree == 0:
            return UnivariatePolynomial([0.0])
        return UnivariatePolynomial(self.coeffs[1:] * np.arange(1, len(self.coeffs)))

    def reversed(self) -> "UnivariatePolynomial":
        """Return ``u**deg * p(1/u)``, i.e. the coefficient-reversed polynomial."""
        return UnivariatePolynomial(self.coeffs[::-1])

    def exact_div(self, other: "UnivariatePolynomial") -> "UnivariatePolynomial":
        """Divide by ``other`` assuming the division is exact.

        Raises ``NumericalError`` when the remainder is not negligible; exact
        divisions are a structural guarantee of the fraction-free elimination
        and of discriminant deflation, so a large remainder means the inputs
        were inconsistent.
        """
        q, r = _polydivmod(self.coeffs, other.coeffs)
        scale = max(self.scale(), 1e-300)
        if np.max(np.abs(r)) > EXACT_DIV_TOL * scale:
            raise NumericalError(
                "polynomial-division",
                f"expected exact division, relative remainder "
                f"{np.max(np.abs(r)) / scale:.3e}",
            )
        return UnivariatePolynomial(q)

    # -- roots -------------------------------------------------------------
    def roots(self, newton_steps: int = NEWTON_STEPS) -> np.ndarray:
        """All complex roots: companion-matrix eigenvalues, Newton-polished."""
        c = self.coeffs
        if len(c) <= 1:
            return np.zeros(0, dtype=complex)
        r = np.roots(c[::-1]).astype(complex)
        dp = self.derivative()
        for _ in range(newton_steps):
            fv = self(r)
            dv = dp(r)
            ok = np.abs(dv) > 1e-300
            step = np.zeros_like(r)
            step[ok] = fv[ok] / dv[ok]
            # at (near-)multiple roots Newton may not help; keep the step only
            # when it stays within the cluster scale
            step[~np.isfinite(step)] = 0.0
            r = r - step
        return r


def _as_coeffs(other) -> np.ndarray:
    if isinstance(other, UnivariatePolynomial):
        return other.coeffs
    return np.atleast_1d(np.asarray(other, dtype=complex if np.iscomplexobj(other) else float))


def _polydivmod(a: np.ndarray, b: np.ndarray):
    """Long division of ascending-coefficient arrays: ``a = q*b + r``."""
    b = _trim1(b)
    if b.size == 1 and b[0] == 0:
        raise ZeroDivisionError("polynomial division by zero")
    a = np.array(a, dtype=np.result_type(a, b, float))
    db, da = len(b) - 1, len(a) - 1
    if da < db:
        return np.zeros(1, dtype=a.dtype), a
    q = np.zeros(da - db + 1, dtype=a.dtype)
    lead = b[-1]
    for k in range(da - db, -1, -1):
        q[k] = a[k + db] / lead
        a[k : k + db + 1] -= q[k] * b
    return q, _trim1(a[:db] if db else a[:1] * 0)


def cluster_roots(roots: np.ndarray, radius: float = DEFAULTS["root_cluster"]):
    """Greedy clustering of near-coincident roots.

    Returns a list of ``(center, multiplicity)`` pairs where ``center`` is the
    mean of the cluster.  The merge radius defaults to the package-wide
    ``root_cluster`` tolerance.
    """
    roots = np.asarray(roots, dtype=complex)
    used = np.zeros(len(roots), dtype=bool)
    order = np.argsort(roots.real, kind="stable")
    clusters = []
    for idx in order:
        if used[idx]:
            continue
        member = np.abs(roots - roots[idx]) <= radius
        member &= ~used
        used |= member
        pts = roots[member]
        clusters.append((complex(np.mean(pts)), int(member.sum())))
    clusters.sort(key=lambda t: (t[0].real, t[0].imag))
    return clusters


class BivariatePolynomial:
    """Polynomial in two variables; ``c[i, j]`` multiplies ``x**i * y**j``."""

    __slots__ = ("c",)

    def __init__(self, c, trim: bool = True):
        m = np.atleast_2d(np.asarray(c))
        if m.dtype.kind not in "fc":
            m = m.astype(float)
        self.c = self._trim2(m) if trim else m

    @staticmethod
    def _trim2(m: np.ndarray) -> np.ndarray:
        scale = np.max(np.abs(m)) if m.size else 0.0
        if scale == 0.0:
            return np.zeros((1, 1), dtype=m.dtype)
        mask = np.abs(m) > COEFF_DROP * scale
        rows = np.nonzero(mask.any(axis=1))[0]
        cols = np.nonzero(mask.any(axis=0))[0]
        return m[: rows[-1] + 1, : cols[-1] + 1]

    # -- structure ---------------------------------------------------------
    @property
    def deg_x(self) -> int:
        return self.c.shape[0] - 1

    @property
    def deg_y(self) -> int:
        return self.c.shape[1] - 1

    @property
    def is_zero(self) -> bool:
        return self.c.shape == (1, 1) and self.c[0, 0] == 0

    def scale(self) -> float:
        return float(np.max(np.abs(self.c)))

    def __repr__(self):
        return f"BivariatePolynomial(deg_x={self.deg_x}, deg_y={self.deg_y})"

    # -- arithmetic --------------------------------------------------------
    def __call__(self, x, y):
        """Evaluate by nested Horner; broadcasts over array arguments."""
        x = np.asarray(x)
        y = np.asarray(y)
        res = npoly.polyval(y, self.c[-1])
        for row in self.c[-2::-1]:
            res = res * x + npoly.polyval(y, row)
        return res

    def __add__(self, other):
        b = other.c if isinstance(other, BivariatePolynomial) else np.atleast_2d(other)
        nx = max(self.c.shape[0], b.shape[0])
        ny = max(self.c.shape[1], b.shape[1])
        out = np.zeros((nx, ny), dtype=np.result_type(self.c, b))
        out[: self.c.shape[0], : self.c.shape[1]] += self.c
        out[: b.shape[0], : b.shape[1]] += b
        return BivariatePolynomial(out)

    def __neg__(self):
        return BivariatePolynomial(-self.c, trim=False)

    def __sub__(self, other):
        if not isinstance(other, BivariatePolynomial):
            other = BivariatePolynomial(np.atleast_2d(other))
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, BivariatePolynomial):
            from scipy.signal import convolve2d

            return BivariatePolynomial(convolve2d(self.c, other.c))
        return BivariatePolynomial(self.c * other)

    __rmul__ = __mul__

    def partial(self, var: str) -> "BivariatePolynomial":
        if var == "x":
            if self.deg_x == 0:
                return BivariatePolynomial([[0.0]])
            mult = np.arange(1, self.c.shape[0])[:, None]
            return BivariatePolynomial(self.c[1:, :] * mult)
        if var == "y":
            if self.deg_y == 0:
                return BivariatePolynomial([[0.0]])
            mult = np.arange(1, self.c.shape[1])[None, :]
            return BivariatePolynomial(self.c[:, 1:] * mult)
        raise ValueError(f"var must be 'x' or 'y', got {var!r}")

    def coeffs_in(self, var: str) -> list[UnivariatePolynomial]:
        """Coefficients of the powers of ``var`` as polynomials in the other.

        ``coeffs_in('x')[k]`` is the polynomial in y multiplying ``x**k``.
        """
        if var == "x":
            return [UnivariatePolynomial(row) for row in self.c]
        if var == "y":
            return [UnivariatePolynomial(col) for col in self.c.T]
        raise ValueError(f"var must be 'x' or 'y', got {var!r}")

    def swapped(self) -> "BivariatePolynomial":
        """Exchange the roles of x and y."""
        return BivariatePolynomial(self.c.T)

    def reversed_in(self, var: str) -> "BivariatePolynomial":
        """Return ``u**deg * p(1/u, y)`` (or the y analogue): the chart at infinity."""
        if var == "x":
            return BivariatePolynomial(self.c[::-1, :])
        if var == "y":
            return BivariatePolynomial(self.c[:, ::-1])
        raise ValueError(f"var must be 'x' or 'y', got {var!r}")

    def shifted_in(self, var: str, center) -> "BivariatePolynomial":
        """Taylor shift: ``shifted_in('x', c)`` represents ``p(x + c, y)``."""
        if var == "y":
            return self.swapped().shifted_in("x", center).swapped()
        if var != "x":
            raise ValueError(f"var must be 'x' or 'y', got {var!r}")
        n = self.c.shape[0]
        out = np.zeros_like(self.c, dtype=np.result_type(self.c, np.asarray(center)))
        binom = np.ones(n)
        power = 1.0 + 0.0 * center
        for d in range(n):
            # coefficient of x**k in (x + c)**i is C(i, k) c**(i-k); accumulate
            # the diagonal i - k = d across all rows at once (binom[k] holds
            # C(k + d, k), advanced by the hockey-stick identity).
            rows = np.arange(n - d)
            out[rows, :] += (binom[rows, None] * power) * self.c[rows + d, :]
            binom[: n - d - 1] = np.cumsum(binom[: n - d - 1])
            power = power * center
        return BivariatePolynomial(out, trim=False)

    def fiber(self, var: str, value) -> UnivariatePolynomial:
        """Restrict one variable: ``fiber('y', l)`` is the polynomial ``P(., l)``."""
        if var == "y":
            return UnivariatePolynomial(npoly.polyval(value, self.c.T))
        if var == "x":
            return UnivariatePolynomial(npoly.polyval(value, self.c))
        raise ValueError(f"var must be 'x' or 'y', got {var!r}")


def _poly_zero_like(dtype) -> np.ndarray:
    return np.zeros(1, dtype=dtype)


def _conv(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if (len(a) == 1 and a[0] == 0) or (len(b) == 1 and b[0] == 0):
        return np.zeros(1, dtype=np.result_type(a, b))
    return np.convolve(a, b)


def _psub(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = max(len(a), len(b))
    out = np.zeros(n, dtype=np.result_type(a, b))
    out[: len(a)] += a
    out[: len(b)] -= b
    return _trim1(out)


def sylvester_matrix(p: BivariatePolynomial, q: BivariatePolynomial, eliminate: str):
    """Sylvester matrix of p, q w.r.t. the eliminated variable.

    Entries are ascending coefficient arrays (polynomials in the kept
    variable).  Rows follow the classical layout: ``deg q`` shifted copies of
    p's coefficients, then ``deg p`` shifted copies of q's.
    """
    pc = [u.coeffs for u in p.coeffs_in(eliminate)]
    qc = [u.coeffs for u in q.coeffs_in(eliminate)]
    m, n = len(pc) - 1, len(qc) - 1
    if m + n == 0:
        return []
    size = m + n
    dtype = np.result_type(p.c, q.c)
    zero = _poly_zero_like(dtype)
    rows = []
    for shift in range(n):
        row = [zero] * size
        for k, coeff in enumerate(reversed(pc)):
            row[shift + k] = coeff
        rows.append(row)
    for shift in range(m):
        row = [zero] * size
        for k, coeff in enumerate(reversed(qc)):
            row[shift + k] = coeff
        rows.append(row)
    return rows


def _is_zero_poly(c: np.ndarray, scale: float) -> bool:
    return np.max(np.abs(c)) <= 1e-12 * scale


def _resultant_float(M: list) -> UnivariatePolynomial:
    n = len(M)
    matrix_scale = max(max(np.max(np.abs(e)) for e in row) for row in M)
    if matrix_scale == 0.0:
        return UnivariatePolynomial([0.0])
    prev = np.ones(1, dtype=M[0][0].dtype)
    sign = 1.0
    for k in range(n - 1):
        if _is_zero_poly(M[k][k], matrix_scale):
            pivot_row = next(
                (r for r in range(k + 1, n) if not _is_zero_poly(M[r][k], matrix_scale)),
                None,
            )
            if pivot_row is None:
                return UnivariatePolynomial([0.0])
            M[k], M[pivot_row] = M[pivot_row], M[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                num = _psub(_conv(M[k][k], M[i][j]), _conv(M[i][k], M[k][j]))
                M[i][j] = (
                    UnivariatePolynomial(num, trim=False)
                    .exact_div(UnivariatePolynomial(prev, trim=False))
                    .coeffs
                )
            M[i][k] = _poly_zero_like(M[i][k].dtype)
        prev = M[k][k]
        matrix_scale = max(
            matrix_scale,
            max(np.max(np.abs(M[i][j])) for i in range(k + 1, n) for j in range(k + 1, n)),
        )
    return UnivariatePolynomial(sign * M[n - 1][n - 1])


# -- exact-arithmetic fallback ----------------------------------------------
#
# Binary floats are exact dyadic rationals, so converting coefficients to
# Fraction and repeating the elimination makes every division exact by
# construction.  This path only runs when the float elimination loses too much
# precision for its division check, which happens for larger Sylvester
# matrices where rounding compounds across pivots.


def _frac_poly(c) -> tuple:
    out = [Fraction(float(v)) for v in np.atleast_1d(c)]
    while len(out) > 1 and out[-1] == 0:
        out.pop()
    return tuple(out)


def _frac_mul(a: tuple, b: tuple) -> tuple:
    if a == (Fraction(0),) or b == (Fraction(0),):
        return (Fraction(0),)
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, av in enumerate(a):
        if av:
            for j, bv in enumerate(b):
                out[i + j] += av * bv
    while len(out) > 1 and out[-1] == 0:
        out.pop()
    return tuple(out)


def _frac_sub(a: tuple, b: tuple) -> tuple:
    n = max(len(a), len(b))
    out = [Fraction(0)] * n
    for i, v in enumerate(a):
        out[i] += v
    for i, v in enumerate(b):
        out[i] -= v
    while len(out) > 1 and out[-1] == 0:
        out.pop()
    return tuple(out)


def _frac_div_exact(a: tuple, b: tuple) -> tuple:
    if b == (Fraction(0),):
        raise ZeroDivisionError("polynomial division by zero")
    if a == (Fraction(0),):
        return (Fraction(0),)
    a = list(a)
    db, da = len(b) - 1, len(a) - 1
    if da < db:
        raise NumericalError("polynomial-division", "exact division impossible: degree too low")
    q = [Fraction(0)] * (da - db + 1)
    lead = b[-1]
    for k in range(da - db, -1, -1):
        q[k] = a[k + db] / lead
        for j in range(db + 1):
            a[k + j] -= q[k] * b[j]
    if any(v != 0 for v in a[:db]):
        raise NumericalError("polynomial-division", "exact rational division left a remainder")
    while len(q) > 1 and q[-1] == 0:
        q.pop()
    return tuple(q)


def _resultant_exact_fracs(M: list) -> tuple:
    n = len(M)
    E = [[_frac_poly(e) for e in row] for row in M]
    zero = (Fraction(0),)
    prev = (Fraction(1),)
    sign = 1
    for k in range(n - 1):
        if E[k][k] == zero:
            pivot_row = next((r for r in range(k + 1, n) if E[r][k] != zero), None)
            if pivot_row is None:
                return zero
            E[k], E[pivot_row] = E[pivot_row], E[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                num = _frac_sub(_frac_mul(E[k][k], E[i][j]), _frac_mul(E[i][k], E[k][j]))
                E[i][j] = _frac_div_exact(num, prev)
            E[i][k] = zero
        prev = E[k][k]
    return tuple(sign * v for v in E[n - 1][n - 1])


def _resultant_exact(M: list) -> UnivariatePolynomial:
    return UnivariatePolynomial([float(v) for v in _resultant_exact_fracs(M)])


def resultant(
    p: BivariatePolynomial, q: BivariatePolynomial, eliminate: str
) -> UnivariatePolynomial:
    """Resultant of p and q, eliminating ``eliminate``.

    Fraction-free Bareiss elimination over the polynomial ring keeps every
    intermediate an exact polynomial.  The fast float path verifies each of
    its structurally-exact divisions; if rounding breaks one, the whole
    elimination is repeated in exact rational arithmetic.  The returned
    polynomial lives in the kept variable.
    """
    M = sylvester_matrix(p, q, eliminate)
    if len(M) == 0:
        return UnivariatePolynomial([1.0])
    if np.iscomplexobj(p.c) or np.iscomplexobj(q.c):
        return _resultant_float(M)
    try:
        return _resultant_float([row[:] for row in M])
    except NumericalError:
        return _resultant_exact(M)


def discriminant(p: BivariatePolynomial, fiber_var: str) -> UnivariatePolynomial:
    """Discriminant of ``p`` viewed as a polynomial in ``fiber_var``.

    Computed as ``(-1)**(n*(n-1)/2) * resultant(p, dp/dvar) / lc`` where ``n``
    and ``lc`` are the degree and leading coefficient in ``fiber_var``; the
    division is exact and verified.  The result is a polynomial in the other
    variable, whose roots are the points over which the ``fiber_var``-fiber
    has a repeated root (for a monic quadratic this is the familiar
    ``b**2 - 4ac``).
    """
    dp = p.partial(fiber_var)
    res = resultant(p, dp, eliminate=fiber_var)
    n = p.deg_x if fiber_var == "x" else p.deg_y
    sign = -1.0 if (n * (n - 1) // 2) % 2 else 1.0
    if res.is_zero:
        return res
    lc = p.coeffs_in(fiber_var)[-1]
    try:
        return sign * res.exact_div(lc)
    except NumericalError:
        # The float resultant was too noisy for the deflation; redo the whole
        # chain in exact rational arithmetic.
        M = sylvester_matrix(p, dp, fiber_var)
        num = _resultant_exact_fracs(M)
        den = _frac_poly(lc.coeffs)
        return UnivariatePolynomial([sign * float(v) for v in _frac_div_exact(num, den)])


def kernel_from_model(fe) -> BivariatePolynomial:
    """Extract the kernel polynomial from an assembled functional equation.

    The interior generator is stored pre-multiplied into polynomial form, so
    the kernel is exactly that object; this accessor re-trims and sanity
    checks the degrees.
    """
    P = fe.interior_gen
    if not isinstance(P, BivariatePolynomial):
        P = BivariatePolynomial(P)
    b = fe.bounds
    want_x = b.i_minus + b.i_plus
    want_y = b.j_minus + b.j_plus
    if P.deg_x > want_x or P.deg_y > want_y:
        raise NumericalError(
            "kernel",
            f"kernel degrees ({P.deg_x},{P.deg_y}) exceed bounds ({want_x},{want_y})",
        )
    return P
