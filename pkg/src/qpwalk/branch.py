"""Branch points of the kernel curve, cut pairing, and surface genus.

A branch point in the y-plane is a point over which the x-fiber of the kernel
has a repeated root; these are the roots of the discriminant with respect to
x.  Points are classified against the unit circle because only the ones
strictly inside the closed unit disc can carry boundary conditions for the
stationary generating functions.

Some discriminant roots correspond to fibers whose repeated root sits at
infinity (the fiber degree drops by two or more there).  Those are genuine
square-root collisions in a reciprocal chart and are flagged so that curve
tracing can switch charts.

The genus of the kernel curve is computed through the Riemann-Hurwitz formula
``2 - 2g = 2n - B`` for the degree-``n`` covering obtained by projecting on
one coordinate.  The total ramification ``B`` is measured numerically: around
every candidate critical value (discriminant roots, leading-coefficient
roots, and the point at infinity) the fiber roots are tracked along a small
circle and the resulting sheet permutation contributes ``n - #cycles``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import NumericalError
from .kernel import (
    BivariatePolynomial,
    UnivariatePolynomial,
    cluster_roots,
    discriminant,
)
from .tolerances import DEFAULTS

ON_CIRCLE_TOL = DEFAULTS["on_circle"]
CLUSTER_RADIUS = DEFAULTS["root_cluster"]

# A reducible (or non-reduced) kernel makes the discriminant collapse; the
# threshold compares its coefficient scale against the kernel's.
_DEGENERATE_DISC = 1e-10


def _fiber_var(plane: str) -> str:
    if plane == "y":
        return "x"
    if plane == "x":
        return "y"
    raise ValueError(f"plane must be 'x' or 'y', got {plane!r}")


@dataclass(frozen=True)
class BranchPoint:
    """A critical value of the projection onto one coordinate plane."""

    location: complex
    multiplicity: int
    plane: str
    region: str  # 'interior' | 'boundary' | 'exterior' relative to |.| = 1
    pair_at_infinity: bool  # the colliding fiber roots escape to infinity

    @property
    def is_interior(self) -> bool:
        return self.region == "interior"


@dataclass(frozen=True)
class CutSegment:
    """A straight cut joining two paired branch points in one plane."""

    plane: str
    kind: str  # 'real' | 'conjugate'
    e1: complex
    e2: complex
    pair_at_infinity: tuple[bool, bool]

    @property
    def midpoint(self) -> complex:
        return 0.5 * (self.e1 + self.e2)

    @property
    def half_span(self) -> complex:
        return 0.5 * (self.e2 - self.e1)

    def parametrize(self, theta):
        """Cosine parametrization: ``theta = 0`` is e2, ``theta = pi`` is e1.

        The cosine substitution absorbs the square-root behaviour of the
        colliding fiber roots at both endpoints, so traced curves are smooth
        functions of ``theta``.
        """
        return self.midpoint + self.half_span * np.cos(theta)


def branch_count_bounds(P: BivariatePolynomial) -> dict[str, int]:
    """Upper bounds for the number of branch points in each plane."""
    I, J = P.deg_x, P.deg_y
    return {"x": 2 * I * (J - 1), "y": 2 * J * (I - 1)}


def _fiber_degree_drop(P: BivariatePolynomial, fiber_var: str, loc: complex) -> int:
    """How many fiber roots escape to infinity over ``loc``."""
    coeffs = P.coeffs_in(fiber_var)
    values = np.array([b(loc) for b in coeffs])
    scale = np.max(np.abs(values))
    if scale == 0.0:
        return len(values) - 1
    drop = 0
    for v in values[::-1]:
        if abs(v) > 1e-9 * scale:
            break
        drop += 1
    return drop


def find_branch_points(
    P: BivariatePolynomial,
    plane: str,
    on_circle_tol: float = ON_CIRCLE_TOL,
    strict_circle: bool = True,
) -> list[BranchPoint]:
    """All branch points in one coordinate plane, classified.

    Raises ``NumericalError`` when the discriminant degenerates (repeated
    kernel factor) or — under ``strict_circle`` — when a branch point sits on
    the unit circle, which signals a non-ergodic model for which the interior/
    exterior split is meaningless.
    """
    fv = _fiber_var(plane)
    disc = discriminant(P, fv)
    n = P.deg_x if fv == "x" else P.deg_y
    if disc.is_zero or disc.scale() <= _DEGENERATE_DISC * max(1.0, P.scale()) ** (
        2 * n - 1
    ):
        raise NumericalError(
            "branch-points",
            "discriminant vanishes identically: kernel has a repeated factor",
        )
    if disc.degree == 0:
        return []
    clusters = cluster_roots(disc.roots(), radius=CLUSTER_RADIUS)
    points = []
    for center, mult in clusters:
        r = abs(center)
        if abs(r - 1.0) <= on_circle_tol:
            if strict_circle:
                raise NumericalError(
                    "branch-points",
                    f"branch point {center:.12g} lies on the unit circle "
                    "(non-ergodic or degenerate model)",
                )
            region = "boundary"
        elif r < 1.0:
            region = "interior"
        else:
            region = "exterior"
        drop = _fiber_degree_drop(P, fv, center)
        points.append(
            BranchPoint(
                location=complex(center),
                multiplicity=mult,
                plane=plane,
                region=region,
                pair_at_infinity=drop >= 2,
            )
        )
    points.sort(key=lambda b: (b.location.real, b.location.imag))
    return points


def unit_circle_winding(p: UnivariatePolynomial, samples: int = 8192) -> int:
    """Number of roots of ``p`` inside the unit circle by the argument principle."""
    theta = np.linspace(0.0, 2.0 * np.pi, samples, endpoint=True)
    values = p(np.exp(1j * theta))
    if np.min(np.abs(values)) < 1e-12 * max(p.scale(), 1e-300):
        raise NumericalError("winding", "polynomial nearly vanishes on the unit circle")
    total = np.unwrap(np.angle(values))
    return int(np.rint((total[-1] - total[0]) / (2.0 * np.pi)))


def _is_real(z: complex) -> bool:
    return abs(z.imag) <= 1e-9 * (1.0 + abs(z))


def pair_cuts(points: list[BranchPoint], region: str = "interior") -> list[CutSegment]:
    """Pair the branch points of one region into candidate cuts.

    Real points are paired consecutively along the real axis; complex ones
    must come in conjugate pairs.  Both situations occur for models with big
    jumps.  An odd leftover means the configuration is not of the expected
    form and is reported as an error.  By default only interior points are
    paired — those are the candidates for boundary conditions — but the
    exterior ones can be paired too (they carry the remaining components of
    the curve).
    """
    interior = [b for b in points if b.region == region]
    if not interior:
        return []
    plane = interior[0].plane
    reals = sorted(
        (b for b in interior if _is_real(b.location)), key=lambda b: b.location.real
    )
    complexes = [b for b in interior if not _is_real(b.location)]
    expanded = []
    for b in reals + complexes:
        expanded.extend([b] * b.multiplicity)
    reals = [b for b in expanded if _is_real(b.location)]
    complexes = [b for b in expanded if not _is_real(b.location)]
    if len(reals) % 2:
        raise NumericalError(
            "cut-pairing", f"odd number of real interior branch points ({len(reals)})"
        )
    cuts = []
    for a, b in zip(reals[0::2], reals[1::2]):
        cuts.append(
            CutSegment(
                plane=plane,
                kind="real",
                e1=complex(a.location.real),
                e2=complex(b.location.real),
                pair_at_infinity=(a.pair_at_infinity, b.pair_at_infinity),
            )
        )
    lower = sorted((b for b in complexes if b.location.imag < 0), key=lambda b: b.location.real)
    upper = sorted((b for b in complexes if b.location.imag > 0), key=lambda b: b.location.real)
    if len(lower) != len(upper):
        raise NumericalError(
            "cut-pairing", "complex interior branch points are not conjugate-symmetric"
        )
    for a, b in zip(lower, upper):
        if abs(a.location - b.location.conjugate()) > 1e-7 * (1.0 + abs(a.location)):
            raise NumericalError(
                "cut-pairing",
                f"cannot match {a.location:.10g} with a conjugate partner",
            )
        cuts.append(
            CutSegment(
                plane=plane,
                kind="conjugate",
                e1=a.location,
                e2=b.location,
                pair_at_infinity=(a.pair_at_infinity, b.pair_at_infinity),
            )
        )
    cuts.sort(key=lambda c: (c.e1.real, c.e1.imag))
    return cuts


# -- genus through numerical monodromy ---------------------------------------


@dataclass(frozen=True)
class BranchContribution:
    base: complex
    at_infinity: bool
    cycle_lengths: tuple[int, ...]

    @property
    def ramification(self) -> int:
        return sum(c - 1 for c in self.cycle_lengths)


@dataclass(frozen=True)
class GenusReport:
    fiber_var: str
    degree: int
    genus: int
    total_ramification: int
    transitive: bool
    contributions: tuple[BranchContribution, ...]


def _chordal_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise spherical (chordal) distances, tolerating infinities."""
    wa = 1.0 / np.sqrt(1.0 + np.abs(a) ** 2)
    wb = 1.0 / np.sqrt(1.0 + np.abs(b) ** 2)
    fa = np.where(np.isfinite(a), a, 0.0) * np.where(np.isfinite(a), 1.0, 0.0)
    fb = np.where(np.isfinite(b), b, 0.0) * np.where(np.isfinite(b), 1.0, 0.0)
    # chord(p, q) = |p - q| * wp * wq with the convention chord(inf, q) = wq
    diff = np.abs(fa[:, None] - fb[None, :]) * (wa[:, None] * wb[None, :])
    inf_a = ~np.isfinite(a)
    inf_b = ~np.isfinite(b)
    diff[inf_a, :] = wb[None, :]
    diff[:, inf_b] = wa[:, None]
    diff[np.ix_(inf_a, inf_b)] = 0.0
    return diff


def _padded_fiber_roots(
    P: BivariatePolynomial, fiber_var: str, base: complex, degree: int
) -> np.ndarray:
    poly = P.fiber("y" if fiber_var == "x" else "x", base)
    # fiber() restricts the *other* variable, leaving a polynomial in fiber_var
    roots = poly.roots()
    if len(roots) < degree:
        roots = np.concatenate([roots, np.full(degree - len(roots), np.inf + 0j)])
    return roots


def _loop_permutation(
    P: BivariatePolynomial,
    fiber_var: str,
    center: complex,
    radius: float,
    degree: int,
    samples: int = 64,
    max_samples: int = 4096,
) -> np.ndarray:
    """Permutation of the fiber sheets along a small positively-oriented loop."""
    while True:
        theta = np.linspace(0.0, 2.0 * np.pi, samples + 1)
        bases = center + radius * np.exp(1j * theta)
        prev = _padded_fiber_roots(P, fiber_var, bases[0], degree)
        start = prev.copy()
        worst = 0.0
        for b in bases[1:]:
            cur = _padded_fiber_roots(P, fiber_var, b, degree)
            cost = _chordal_matrix(prev, cur)
            rows, cols = linear_sum_assignment(cost)
            worst = max(worst, float(cost[rows, cols].max()))
            order = np.empty(degree, dtype=int)
            order[rows] = cols
            prev = cur[order]
        # sheet i ends on top of the start position of sheet perm[i]
        cost = _chordal_matrix(prev, start)
        rows, cols = linear_sum_assignment(cost)
        closing = float(cost[rows, cols].max())
        if (worst <= 0.25 and closing <= 0.25) or samples >= max_samples:
            if worst > 0.45:
                raise NumericalError(
                    "monodromy",
                    f"sheet tracking around {center:.6g} lost continuity "
                    f"(max chordal step {worst:.3f})",
                )
            perm = np.empty(degree, dtype=int)
            perm[rows] = cols
            return perm
        samples *= 2


def _cycle_lengths(perm: np.ndarray) -> tuple[int, ...]:
    seen = np.zeros(len(perm), dtype=bool)
    out = []
    for start in range(len(perm)):
        if seen[start]:
            continue
        length = 0
        k = start
        while not seen[k]:
            seen[k] = True
            k = perm[k]
            length += 1
        out.append(length)
    return tuple(sorted(out, reverse=True))


def genus_by_monodromy(P: BivariatePolynomial, fiber_var: str = "x") -> GenusReport:
    """Genus of the kernel curve from the ramification of one projection.

    Tracks the fiber sheets around every candidate critical value and sums
    the ramification into the Riemann-Hurwitz formula.  Also reports whether
    the monodromy group acts transitively on the sheets — if it does not, the
    curve is reducible and the genus of the whole zero set is undefined.
    """
    base_var = "y" if fiber_var == "x" else "x"
    degree = P.deg_x if fiber_var == "x" else P.deg_y
    if degree < 1:
        raise NumericalError("genus", "kernel is constant in the fiber variable")
    if degree == 1:
        return GenusReport(fiber_var, 1, 0, 0, True, ())
    disc = discriminant(P, fiber_var)
    if disc.is_zero or disc.scale() <= _DEGENERATE_DISC * max(1.0, P.scale()) ** (
        2 * degree - 1
    ):
        raise NumericalError(
            "genus", "discriminant vanishes identically: kernel has a repeated factor"
        )
    lc = P.coeffs_in(fiber_var)[-1]
    cand = list(disc.roots())
    if lc.degree > 0:
        cand.extend(lc.roots())
    centers = [c for c, _ in cluster_roots(np.array(cand), radius=CLUSTER_RADIUS)]
    radii = []
    for i, c in enumerate(centers):
        others = [abs(c - d) for j, d in enumerate(centers) if j != i]
        radii.append(max(min(others, default=1.0) / 8.0, 1e-9))
    contributions = []
    perms = []
    for c, r in zip(centers, radii):
        perm = _loop_permutation(P, fiber_var, c, r, degree)
        cyc = _cycle_lengths(perm)
        if sum(l - 1 for l in cyc) > 0:
            contributions.append(BranchContribution(complex(c), False, cyc))
        perms.append(perm)
    # the point at infinity in the base plane, through the reciprocal chart
    Q = P.reversed_in(base_var)
    r_inf = 1.0 / (2.0 * (max((abs(c) for c in centers), default=0.0) + 1.0))
    perm_inf = _loop_permutation(Q, fiber_var, 0.0, r_inf, degree)
    cyc_inf = _cycle_lengths(perm_inf)
    if sum(l - 1 for l in cyc_inf) > 0:
        contributions.append(BranchContribution(complex(np.inf), True, cyc_inf))
    perms.append(perm_inf)
    total = sum(c.ramification for c in contributions)
    if total % 2:
        raise NumericalError(
            "genus", f"total ramification {total} is odd — sheet tracking failed"
        )
    # orbit connectivity of the generated permutation group
    parent = list(range(degree))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for perm in perms:
        for a, b in enumerate(perm):
            ra, rb = find(a), find(int(b))
            if ra != rb:
                parent[ra] = rb
    transitive = len({find(a) for a in range(degree)}) == 1
    genus = total // 2 - degree + 1
    return GenusReport(
        fiber_var=fiber_var,
        degree=degree,
        genus=genus,
        total_ramification=total,
        transitive=transitive,
        contributions=tuple(contributions),
    )


def genus_cross_checked(P: BivariatePolynomial) -> tuple[GenusReport, GenusReport]:
    """Genus from both projections; raises when they disagree.

    The two coverings live on the same Riemann surface, so a mismatch means
    the numerical monodromy lost a sheet somewhere.
    """
    gx = genus_by_monodromy(P, "x")
    gy = genus_by_monodromy(P, "y")
    if gx.transitive and gy.transitive and gx.genus != gy.genus:
        raise NumericalError(
            "genus",
            f"projections disagree: genus {gx.genus} (x-fiber) vs {gy.genus} (y-fiber)",
        )
    return gx, gy
