"""Closed boundary curves traced over cuts, their involution, validation.

Over every cut joining two paired branch points the two colliding fiber
roots sweep out a curve in the other coordinate plane.  With the cosine
parametrization of the cut the square-root collisions at the endpoints are
absorbed and the two root branches join into one smooth closed loop: one
branch is traversed as the parameter runs from 0 to pi, the other on the
way back.  The loop carries a natural involution - swap the two roots over
the same base point - which in the stored sample arrays is the index
mirror ``k -> N - k``.

Some loops close through the point at infinity: the colliding pair escapes
as the base point approaches an endpoint whose fiber degree drops by two.
Those loops are traced in a Moebius chart ``z = 1/(x - c)`` with a real
center ``c`` chosen off the curve; in the chart the loop is an ordinary
bounded Jordan curve and every metric below applies verbatim.

Not every candidate cut produces a closed loop.  The tracked pair may fail
to re-collide at the far endpoint because its members exchange with a
third fiber sheet along the way; such cuts cannot carry a boundary
condition.  ``validate_cut`` turns this into a hard accept/reject verdict
and ``curve_validated_branch_points`` reports which branch points survive
it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .branch import CutSegment, find_branch_points, pair_cuts
from .errors import NumericalError
from .kernel import BivariatePolynomial
from .tolerances import DEFAULTS

_MAX_DEPTH = 26
_END_PROBE_FRACTION = 16  # far-end probe sits this fraction of a step before pi
_RECOLLIDE_CHORDAL = 0.1  # sphere gap separating "re-collides" from "exchanged"


def _chart_kernel(K: BivariatePolynomial, center) -> BivariatePolynomial:
    """Kernel in the chart ``x = center + 1/z`` (identity when center is None)."""
    if center is None:
        return K
    return K.shifted_in("x", center).reversed_in("x")


def _to_plane(chart_points, center):
    """Convert chart samples back to plane coordinates (0 maps to infinity)."""
    z = np.asarray(chart_points, dtype=complex)
    if center is None:
        return z.copy()
    at_zero = z == 0
    safe = np.where(at_zero, 1.0, z)
    out = center + 1.0 / safe
    return np.where(at_zero, complex(np.inf), out)


def _chordal(a: complex, b: complex) -> float:
    """Distance on the Riemann sphere; chart-independent, handles infinity."""
    inf_a, inf_b = not np.isfinite(a), not np.isfinite(b)
    if inf_a and inf_b:
        return 0.0
    if inf_a:
        return 1.0 / np.sqrt(1.0 + abs(b) ** 2)
    if inf_b:
        return 1.0 / np.sqrt(1.0 + abs(a) ** 2)
    return abs(a - b) / np.sqrt((1.0 + abs(a) ** 2) * (1.0 + abs(b) ** 2))


def _collision_point(W: BivariatePolynomial, l: complex) -> complex:
    """The repeated fiber root over a cut endpoint, from the derivative roots."""
    f = W.fiber("y", l)
    if f.degree < 2:
        raise NumericalError(
            "curve-trace",
            f"fiber over endpoint {l} has degree {f.degree}; no colliding pair",
        )
    cands = f.derivative().roots()
    if len(cands) == 0:
        raise NumericalError("curve-trace", f"fiber over endpoint {l} has no critical point")
    vals = np.abs(f(cands))
    k = int(np.argmin(vals))
    scale = f.scale() * max(1.0, abs(cands[k])) ** f.degree
    if vals[k] > 1e-5 * scale:
        raise NumericalError(
            "curve-trace",
            f"no repeated fiber root over endpoint {l} "
            f"(best residual {vals[k]:.3g} against scale {scale:.3g})",
        )
    return complex(cands[k])


def _pair_at(W: BivariatePolynomial, l: complex, a: complex, b: complex):
    """Match the tracked pair to the fiber roots over a new base point."""
    roots = W.fiber("y", l).roots()
    if len(roots) < 2:
        raise NumericalError(
            "curve-trace", f"fiber degenerates over {l}: fewer than two roots"
        )
    cost = np.abs(roots[None, :] - np.array([a, b])[:, None])
    rows, cols = linear_sum_assignment(cost)
    picked = dict(zip(rows.tolist(), cols.tolist()))
    return complex(roots[picked[0]]), complex(roots[picked[1]])


def _march(W, base_of, s0, s1, a, b, jump, depth=0):
    """Advance the tracked pair from s0 to s1, bisecting until continuous."""
    a1, b1 = _pair_at(W, base_of(s1), a, b)
    step = max(abs(a1 - a) / (1.0 + abs(a)), abs(b1 - b) / (1.0 + abs(b)))
    if step <= jump:
        return a1, b1
    if depth >= _MAX_DEPTH:
        raise NumericalError(
            "curve-trace",
            f"unresolvable discontinuity of the tracked pair near parameter "
            f"{s1:.6f} (relative step {step:.3g})",
        )
    sm = 0.5 * (s0 + s1)
    am, bm = _march(W, base_of, s0, sm, a, b, jump, depth + 1)
    return _march(W, base_of, sm, s1, am, bm, jump, depth + 1)


def _signed_area(points: np.ndarray) -> float:
    ahead = np.roll(points, -1)
    return float(0.5 * np.sum(np.imag(np.conj(points) * ahead)))


@dataclass
class CurveTrace:
    """A closed loop sampled on a uniform parameter grid.

    ``chart[k]`` is the loop point over ``base[k] = cut.parametrize(theta[k])``
    in chart coordinates; for bounded loops the chart is the identity
    (``chart_center is None``).  Index 0 sits over the e2 endpoint of the cut,
    index ``size // 2`` over e1, and the root-swap involution is the index
    mirror ``k -> size - k``.
    """

    cut: CutSegment
    plane: str
    theta: np.ndarray
    base: np.ndarray
    chart: np.ndarray
    chart_center: float | None
    kernel: BivariatePolynomial
    chart_kernel: BivariatePolynomial

    @property
    def size(self) -> int:
        return len(self.theta)

    @property
    def samples(self) -> np.ndarray:
        """Loop samples in plane coordinates (``inf`` where it passes through)."""
        return _to_plane(self.chart, self.chart_center)

    @property
    def passes_through_infinity(self) -> bool:
        return self.chart_center is not None and bool(np.any(self.chart == 0))

    def mirror_index(self, k: int) -> int:
        return (self.size - k) % self.size

    def fixed_points(self):
        """Plane coordinates of the loop points over e2 and e1 (in that order)."""
        pts = _to_plane(self.chart[[0, self.size // 2]], self.chart_center)
        return complex(pts[0]), complex(pts[1])

    def signed_area(self) -> float:
        return _signed_area(self.chart)


def _chart_candidates(K: BivariatePolynomial, cut: CutSegment, requested):
    if requested != "auto":
        return [requested]
    magnitudes = [1.0]
    mid_roots = K.fiber("y", cut.midpoint).roots()
    if len(mid_roots):
        magnitudes.append(float(np.max(np.abs(mid_roots))))
    for end, flagged in ((cut.e2, cut.pair_at_infinity[1]), (cut.e1, cut.pair_at_infinity[0])):
        if flagged:
            continue
        f = K.fiber("y", end)
        crit = f.derivative().roots() if f.degree >= 2 else np.array([])
        if len(crit):
            magnitudes.append(float(np.max(np.abs(crit))))
    m = max(magnitudes)
    moebius = [2.0 * (1.0 + m), -2.0 * (1.0 + m), 3.3 * (1.0 + m)]
    if any(cut.pair_at_infinity):
        return moebius
    return [None] + moebius


def trace_curve(
    P: BivariatePolynomial,
    cut: CutSegment,
    samples: int = 512,
    jump: float = DEFAULTS["curve_jump"],
    chart_center="auto",
) -> CurveTrace:
    """Trace the closed loop swept by the colliding fiber pair over a cut.

    Raises :class:`NumericalError` (stage ``curve-trace``) when the pair does
    not re-collide at the far endpoint or the loop cannot be resolved as a
    continuous curve; those cuts do not carry boundary conditions.
    """
    if samples % 2 or samples < 16:
        raise ValueError("samples must be an even number >= 16")
    if cut.plane == "y":
        K = P
        plane = "x"
    elif cut.plane == "x":
        K = P.swapped()
        plane = "y"
    else:
        raise ValueError(f"cut plane must be 'x' or 'y', got {cut.plane!r}")

    first_error = None
    for center in _chart_candidates(K, cut, chart_center):
        try:
            return _trace_in_chart(K, cut, plane, samples, jump, center)
        except NumericalError as err:
            if first_error is None:
                first_error = err
    raise first_error


def _trace_in_chart(K, cut, plane, n, jump, center) -> CurveTrace:
    W = _chart_kernel(K, center)
    s = 2.0 * np.pi * np.arange(n) / n
    base = np.asarray(cut.parametrize(s), dtype=complex)
    half = n // 2

    t_start = _collision_point(W, base[0])  # over e2
    t_end = _collision_point(W, base[half])  # over e1

    def base_of(sv: float) -> complex:
        return complex(cut.parametrize(sv))

    branch_a = np.empty(half + 1, dtype=complex)
    branch_b = np.empty(half + 1, dtype=complex)
    branch_a[0] = branch_b[0] = t_start
    a, b = t_start, t_start
    for k in range(1, half):
        a, b = _march(W, base_of, s[k - 1], s[k], a, b, jump)
        branch_a[k], branch_b[k] = a, b

    # Probe just short of the far endpoint: a genuinely closing loop has both
    # branches within a fraction of a grid step of the repeated root there,
    # while an exchange with a third sheet leaves an order-one gap.  Measured
    # on the Riemann sphere so the verdict does not depend on the chart.
    s_probe = np.pi - (np.pi / half) / _END_PROBE_FRACTION
    a_p, b_p = _march(W, base_of, s[half - 1], s_probe, a, b, jump)
    pa, pb, pt = _to_plane(np.array([a_p, b_p, t_end]), center)
    gap_a, gap_b = _chordal(pa, pt), _chordal(pb, pt)
    if gap_a > _RECOLLIDE_CHORDAL or gap_b > _RECOLLIDE_CHORDAL:
        raise NumericalError(
            "curve-trace",
            "tracked pair does not re-collide over the cut endpoint "
            f"{cut.e1}: sphere gaps {gap_a:.3g} and {gap_b:.3g}",
        )
    branch_a[half] = branch_b[half] = t_end

    loop = np.empty(n, dtype=complex)
    loop[: half + 1] = branch_a
    loop[half + 1 :] = branch_b[1:half][::-1]

    # Newton-polish every regular sample onto its fiber.
    dW = W.partial("x")
    mask = np.ones(n, dtype=bool)
    mask[0] = mask[half] = False
    z = loop[mask]
    lv = base[mask]
    for _ in range(3):
        dv = dW(z, lv)
        dv = np.where(dv == 0, 1.0, dv)
        z = z - W(z, lv) / dv
    loop[mask] = z

    if _signed_area(loop) < 0.0:
        loop = np.concatenate([loop[:1], loop[:0:-1]])

    return CurveTrace(
        cut=cut,
        plane=plane,
        theta=s,
        base=base,
        chart=loop,
        chart_center=center,
        kernel=K,
        chart_kernel=W,
    )


def _segment_distance(v: complex, cut: CutSegment) -> float:
    d = cut.e2 - cut.e1
    denom = abs(d) ** 2
    if denom == 0.0:
        return abs(v - cut.e1)
    u = np.clip(((v - cut.e1) * np.conj(d)).real / denom, 0.0, 1.0)
    return abs(v - (cut.e1 + u * d))


def automorphism_at(trace: CurveTrace, t: complex) -> complex:
    """The involution partner of a loop point, recomputed from the kernel.

    Independent of the stored mirror structure: the base point is recovered
    as the root of the restricted kernel closest to the cut, and the partner
    as the other fiber root lying on the loop.
    """
    W = trace.chart_kernel
    g = W.fiber("x", complex(t))
    if g.degree < 1:
        raise NumericalError(
            "curve-involution", f"no base point found for loop point {t}"
        )
    cands = g.roots()
    l = min(cands, key=lambda v: _segment_distance(complex(v), trace.cut))
    roots = W.fiber("y", complex(l)).roots()
    if len(roots) < 2:
        raise NumericalError(
            "curve-involution", f"fiber over recovered base {l} has fewer than two roots"
        )
    order = np.argsort(np.abs(roots - t))
    others = roots[order[1:]]
    dist_to_loop = np.abs(others[:, None] - trace.chart[None, :]).min(axis=1)
    return complex(others[int(np.argmin(dist_to_loop))])


def _interp_at_zero(offsets: np.ndarray, values: np.ndarray) -> complex:
    u = offsets / np.max(np.abs(offsets))
    V = np.vander(u, increasing=True).astype(complex)
    coef = np.linalg.solve(V, values)
    return complex(coef[0])


def _closure_defect(trace: CurveTrace, width: int) -> float:
    n = trace.size
    worst = 0.0
    for end in (0, n // 2):
        ks = np.concatenate(
            [end - np.arange(1, width + 1), end + np.arange(1, width + 1)]
        ) % n
        offsets = np.concatenate(
            [-np.arange(1, width + 1), np.arange(1, width + 1)]
        ).astype(float)
        pred = _interp_at_zero(offsets, trace.chart[ks])
        t0 = trace.chart[end]
        worst = max(worst, abs(pred - t0) / (1.0 + abs(t0)))
    return worst


def _polygon_is_simple(points: np.ndarray) -> bool:
    n = len(points)
    a = points
    b = np.roll(points, -1)
    d = b - a

    def cross(z, w):
        return np.imag(np.conj(z) * w)

    c1 = cross(d[:, None], a[None, :] - a[:, None])
    c2 = cross(d[:, None], b[None, :] - a[:, None])
    c3 = cross(d[None, :], a[:, None] - a[None, :])
    c4 = cross(d[None, :], b[:, None] - a[None, :])
    proper = (c1 * c2 < 0.0) & (c3 * c4 < 0.0)
    idx = np.arange(n)
    gap = (idx[:, None] - idx[None, :]) % n
    adjacent = (gap == 0) | (gap == 1) | (gap == n - 1)
    return not bool(np.any(proper & ~adjacent))


@dataclass(frozen=True)
class CurveReport:
    """Contract metrics of one traced loop (all defects are relative)."""

    closure_defect: float
    involution_defect: float
    conjugation_defect: float
    kernel_residual: float
    max_step: float
    jordan: bool
    chart_center: float | None

    def within(
        self,
        closure: float = DEFAULTS["curve_closure"],
        involution: float = DEFAULTS["involution"],
        conjugation: float = DEFAULTS["conjugation"],
        residual: float = DEFAULTS["curve_residual"],
    ) -> bool:
        return (
            self.closure_defect <= closure
            and self.involution_defect <= involution
            and self.conjugation_defect <= conjugation
            and self.kernel_residual <= residual
            and self.jordan
        )


def curve_metrics(
    trace: CurveTrace,
    involution_samples: int = 24,
    closure_width: int = 5,
) -> CurveReport:
    """Measure the contracts of a traced loop.

    Closure: both root branches, interpolated one grid past their last regular
    samples, must land on the independently computed repeated root.
    Involution: the kernel-recomputed partner must agree with the index mirror
    and square to the identity.  Conjugation: the sample set must be stable
    under complex conjugation.  Residual: every sample must sit on its fiber.
    """
    n = trace.size
    W = trace.chart_kernel
    T = trace.chart

    closure = _closure_defect(trace, closure_width)

    # Involution, via the kernel route, away from the collision endpoints.
    guard = max(4, n // 64)
    half = n // 2
    idx = np.arange(n)
    cyc = np.minimum(idx % half, half - (idx % half))
    eligible = idx[cyc >= guard]
    stride = max(1, len(eligible) // involution_samples)
    involution = 0.0
    for k in eligible[::stride]:
        t = complex(T[k])
        partner = automorphism_at(trace, t)
        mirrored = complex(T[trace.mirror_index(int(k))])
        back = automorphism_at(trace, partner)
        scale = 1.0 + abs(t)
        involution = max(
            involution, abs(partner - mirrored) / scale, abs(back - t) / scale
        )

    conj_dist = np.abs(np.conj(T)[:, None] - T[None, :]).min(axis=1)
    conjugation = float(np.max(conj_dist / (1.0 + np.abs(T))))

    denom = (
        W.scale()
        * (1.0 + np.abs(T)) ** W.deg_x
        * (1.0 + np.abs(trace.base)) ** W.deg_y
    )
    residual = float(np.max(np.abs(W(T, trace.base)) / denom))

    steps = np.abs(np.diff(np.concatenate([T, T[:1]])))
    max_step = float(np.max(steps / (1.0 + np.abs(T))))

    return CurveReport(
        closure_defect=closure,
        involution_defect=involution,
        conjugation_defect=conjugation,
        kernel_residual=residual,
        max_step=max_step,
        jordan=_polygon_is_simple(T),
        chart_center=trace.chart_center,
    )


def spectral_tangent(trace: CurveTrace) -> np.ndarray:
    """dT/ds by Fourier differentiation of the closed loop samples."""
    n = trace.size
    freq = np.fft.fftfreq(n, d=1.0 / n)
    spec = np.fft.fft(trace.chart)
    spec *= 1j * freq
    spec[n // 2] = 0.0
    return np.fft.ifft(spec)


def implicit_tangent(trace: CurveTrace) -> np.ndarray:
    """dT/ds from the implicit function theorem (NaN at the endpoints)."""
    Wx = trace.chart_kernel.partial("x")
    Wy = trace.chart_kernel.partial("y")
    dl = -trace.cut.half_span * np.sin(trace.theta)
    with np.errstate(divide="ignore", invalid="ignore"):
        return -Wy(trace.chart, trace.base) / Wx(trace.chart, trace.base) * dl


def winding_number(trace: CurveTrace, z: complex) -> int:
    """Winding of the chart loop around a chart point."""
    T = trace.chart
    if np.min(np.abs(T - z)) < 1e-12:
        raise NumericalError("curve-winding", f"point {z} lies on the loop")
    ahead = np.roll(T, -1)
    ang = np.angle((ahead - z) / (T - z))
    return int(round(float(np.sum(ang)) / (2.0 * np.pi)))


def encloses(trace: CurveTrace, z_plane: complex) -> bool:
    """Whether the loop winds around a point given in plane coordinates."""
    if trace.chart_center is None:
        z = complex(z_plane)
    else:
        if z_plane == trace.chart_center:
            raise NumericalError(
                "curve-winding", "chart center query is ill-defined on this loop"
            )
        z = 1.0 / (complex(z_plane) - trace.chart_center)
    return winding_number(trace, z) != 0


def component_separation(first: CurveTrace, second: CurveTrace) -> float:
    """Minimal plane distance between the finite samples of two loops."""
    a = first.samples
    b = second.samples
    a = a[np.isfinite(a)]
    b = b[np.isfinite(b)]
    return float(np.min(np.abs(a[:, None] - b[None, :])))


def validate_cut(
    P: BivariatePolynomial, cut: CutSegment, samples: int = 512
) -> tuple[CurveTrace, CurveReport]:
    """Trace a cut and enforce the loop contracts; raise if any fails."""
    trace = trace_curve(P, cut, samples=samples)
    report = curve_metrics(trace)
    if not report.within():
        raise NumericalError(
            "curve-validate",
            f"loop over cut {cut.e1}..{cut.e2} violates its contracts: {report}",
        )
    return trace, report


def validated_cuts(
    P: BivariatePolynomial,
    plane: str,
    samples: int = 512,
    region: str = "interior",
) -> list[tuple[CutSegment, CurveTrace, CurveReport]]:
    """All candidate cuts of a region whose loops pass validation."""
    points = find_branch_points(P, plane)
    out = []
    for cut in pair_cuts(points, region=region):
        try:
            trace, report = validate_cut(P, cut, samples=samples)
        except NumericalError:
            continue
        out.append((cut, trace, report))
    return out


def curve_validated_branch_points(
    P: BivariatePolynomial, plane: str, samples: int = 512
) -> list[complex]:
    """Interior branch points that belong to a cut with a validated loop."""
    points: list[complex] = []
    for cut, _, _ in validated_cuts(P, plane, samples=samples):
        points.extend([cut.e1, cut.e2])
    return points
