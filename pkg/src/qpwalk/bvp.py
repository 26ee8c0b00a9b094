"""Boundary relations on traced loops and the stationary-law solver.

For a walk whose negative jumps have unit amplitude the stationary law has
three unknown pieces: one generating function per axis, the interior
series, and the origin mass.  Restricting the functional equation to the
two kernel roots over a point of the interior cut and eliminating the
vertical unknown (its value only depends on the cut point) leaves a scalar
relation along the traced loop,

    h(t) - G(t) h(alpha(t)) = rho(t) * origin_mass,

where ``alpha`` is the root-swap involution and ``G`` is unimodular on
loops over real cuts.  Transplanted to the unit disk through the conformal
gluing, the relation determines one function holomorphic in the disk -- up
to the finitely many poles and branch points that the analytically
continued axis function is forced to carry between the unit circle and the
loop.  The solver therefore:

1. discovers that singular set from the kernel and the generators alone:
   common zeros of the horizontal generator and the kernel realized on the
   small vertical branch (axis poles), their mirror images on the vertical
   side, pole locations induced through the kernel fiber, and enclosed
   fiber-degeneracy points where the continuation branches;
2. multiplies the singular part out with disk-coordinate clearing factors,
   leaving a plain power series with real coefficients;
3. solves the transplanted relation by least-squares collocation over that
   power basis, closing the system with interpolation conditions at
   interior common zeros of the vertical generator and the kernel, and
   with analyticity constraints (vanishing negative Fourier modes) on the
   back-substituted vertical function;
4. normalizes by total mass one via Cauchy means on a small ring around
   the point (1, 1), and reads every stationary mass off circle / torus
   Fourier coefficients of the evaluators.

Walks with wider negative jumps couple several axis unknowns along several
loops; the assembly of those vector conditions (one elimination step per
loop, bookkeeping contract included) is provided here as well.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as npoly

from .branch import find_branch_points
from .conformal import DiskMap, disk_map_from_trace, trig_interp, upsample_periodic
from .curve import CurveTrace, validated_cuts
from .errors import ModelError, NumericalError
from .kernel import BivariatePolynomial, kernel_from_model, resultant
from .model import (
    FunctionalEquation,
    HomogeneityClass,
    WalkModel,
    model_to_dict,
)

TWO_PI = 2.0 * np.pi

#: Raised message when an evaluator is asked for a value on (or beyond) the
#: curve that carries the boundary relation.
ON_CONTOUR_MESSAGE = (
    "on-contour evaluation requires principal value — use limit from inside"
)
#: Raised message when the numerics detect a non-ergodic model.
NOT_ERGODIC_MESSAGE = "model not ergodic (numerically)"
#: Raised message when the boundary relation has nonzero solvability index.
NONZERO_INDEX_MESSAGE = "index ≠ 0: solution formula requires modification"
#: Raised message when a coefficient needed by the elimination degenerates.
SINGULAR_COEFFICIENT_MESSAGE = "singular coefficient"


def _class_gen(fe: FunctionalEquation, kind: str, index=()) -> BivariatePolynomial:
    return fe.class_gens[HomogeneityClass(kind, index)]


def _require_unit_negative(fe: FunctionalEquation) -> None:
    b = fe.bounds
    if (b.i_minus, b.j_minus, b.i_zero, b.j_zero) != (1, 1, 1, 1):
        raise ModelError(
            "the scalar boundary reduction needs unit negative jumps and unit "
            f"reflection offsets; got i-={b.i_minus} j-={b.j_minus} "
            f"i0={b.i_zero} j0={b.j_zero}"
        )


def _pair_c(z: complex) -> list[float]:
    return [float(np.real(z)), float(np.imag(z))]


# ---------------------------------------------------------------------------
# Boundary conditions on a traced loop.


@dataclass
class BoundaryCondition:
    """Samples of one eliminated boundary relation along a traced loop.

    At parameter ``t[k]`` the loop point is ``x[k]`` (plane coordinates of
    the loop variable), its involution partner is ``partner[k]``, both lying
    over the base point ``base[k]`` of the cut.  For loops over real cuts
    the involution is complex conjugation.

    The relation stored in the general (system) form is

        sum_u loop_coefficients[u]    * u(x)
      - sum_u partner_coefficients[u] * u(partner)
      + sum_w base_coefficients[w]    * w(base)
      = sum_s scalar_coefficients[s]  * pi_s,

    where ``u`` ranges over the unknown functions of the loop variable,
    ``w`` over the surviving unknowns of the base variable, and ``pi_s``
    over the unknown scalar masses.  When the model has a single unknown
    per axis and one scalar, the normalized scalar form is also populated:
    ``transition`` is the unimodular factor ``G`` and ``inhomogeneity`` the
    factor ``rho`` multiplying the origin mass in
    ``h(t) - G(t) h(alpha(t)) = rho(t) * pi00``.

    ``coeff_axis_x`` / ``coeff_axis_y`` / ``coeff_origin`` sample the first
    horizontal-strip, first vertical-strip and origin generators at the
    loop-side point pair; the ``_partner`` triple samples them at the
    partner pair.
    """

    trace: CurveTrace
    t: np.ndarray
    x: np.ndarray
    partner: np.ndarray
    base: np.ndarray
    coeff_axis_x: np.ndarray
    coeff_axis_y: np.ndarray
    coeff_origin: np.ndarray
    coeff_axis_x_partner: np.ndarray
    coeff_axis_y_partner: np.ndarray
    coeff_origin_partner: np.ndarray
    eliminated: str
    loop_coefficients: dict[str, np.ndarray]
    partner_coefficients: dict[str, np.ndarray]
    base_coefficients: dict[str, np.ndarray]
    scalar_coefficients: dict[str, np.ndarray]
    part_of_system: bool
    transition: np.ndarray | None
    inhomogeneity: np.ndarray | None

    @property
    def size(self) -> int:
        return len(self.t)

    # -- windings ----------------------------------------------------------

    @staticmethod
    def _winding(values: np.ndarray) -> float:
        vals = np.asarray(values, dtype=complex)
        finite = np.isfinite(vals) & (np.abs(vals) > 0.0)
        vals = vals[finite]
        ang = np.angle(np.roll(vals, -1) / vals)
        return float(np.sum(ang) / TWO_PI)

    def transition_winding(self) -> float:
        """Winding of the raw transition factor ``G`` along the loop."""
        self._require_scalar()
        return self._winding(self.transition)

    def index_winding(self) -> float:
        """Solvability index of the scalar relation.

        Winding along the loop of the coefficient ratio of the unknown
        series normalized to start at order zero: the elimination factor
        (a ratio of partner-swapped vertical coefficients) and the monomial
        carried by the premultiplied generator are both stripped, since
        they are unimodular bookkeeping factors of the reduction, not part
        of the unknown's own coefficient.
        """
        self._require_scalar()
        ratio = (self.coeff_axis_x_partner * self.x) / (
            self.coeff_axis_x * self.partner
        )
        return self._winding(ratio)

    def _require_scalar(self) -> None:
        if self.transition is None:
            raise NumericalError(
                "boundary-condition",
                "the scalar form of this condition is not available; it is "
                "part of a vector system",
            )

    # -- consistency checks ------------------------------------------------

    def antisymmetry_defect(self) -> float:
        """Self-consistency of the scalar relation under the involution.

        Applying the relation at ``alpha(t)`` must return the original:
        ``G(t) G(alpha(t)) = 1`` and ``rho(alpha(t)) = -rho(t) / G(t)``.
        Only meaningful on parameter grids symmetric under ``t -> -t``
        (the natural trace grid and disk-angle grids both are).
        """
        self._require_scalar()
        n = self.size
        m = (n - np.arange(n)) % n
        grid_defect = float(np.max(np.abs(self.x[m] - self.partner)))
        g_defect = float(np.max(np.abs(self.transition * self.transition[m] - 1.0)))
        scale = 1.0 + float(np.max(np.abs(self.inhomogeneity)))
        r_defect = float(
            np.max(
                np.abs(
                    self.inhomogeneity[m]
                    + self.inhomogeneity / self.transition
                )
            )
            / scale
        )
        return max(grid_defect, g_defect, r_defect)

    def pre_elimination_residual(self, h_func, v_func, origin_mass: float) -> float:
        """Residual of the raw two-root relation with supplied axis functions.

        ``h_func`` and ``v_func`` evaluate the axis generating functions; the
        identity is checked at every sample and at its partner, normalized by
        the largest term magnitude.
        """
        self._require_scalar()
        worst = 0.0
        for xs, cx, cy, c0 in (
            (self.x, self.coeff_axis_x, self.coeff_axis_y, self.coeff_origin),
            (
                self.partner,
                self.coeff_axis_x_partner,
                self.coeff_axis_y_partner,
                self.coeff_origin_partner,
            ),
        ):
            terms = np.stack(
                [cx * h_func(xs), cy * v_func(self.base), c0 * origin_mass]
            )
            resid = np.abs(terms.sum(axis=0))
            scale = np.max(np.abs(terms), axis=0)
            scale = np.where(scale == 0.0, 1.0, scale)
            worst = max(worst, float(np.max(resid / scale)))
        return worst

    def eliminated_residual(self, h_func, origin_mass: float) -> float:
        """Residual of ``h(t) - G h(partner) - rho * pi00`` with supplied h."""
        self._require_scalar()
        lhs = h_func(self.x) - self.transition * h_func(self.partner)
        rhs = self.inhomogeneity * origin_mass
        scale = 1.0 + np.abs(lhs) + np.abs(rhs)
        return float(np.max(np.abs(lhs - rhs) / scale))

    def elimination_identity_residual(
        self, f_loop, f_partner, f_base, scalars
    ) -> float:
        """Algebraic reconstruction check of the scalar reduction.

        With *arbitrary* sample arrays in place of the unknown values, the
        normalized relation must equal the explicit linear combination of
        the two raw functional-equation instances that produced it:

          f1 - G f2 - rho*s  ==  [py*(cx f1 + cy fb + c0 s)
                                   - cy*(px f2 + py fb + p0 s)] / (py*cx).
        """
        self._require_scalar()
        f1 = np.asarray(f_loop, dtype=complex)
        f2 = np.asarray(f_partner, dtype=complex)
        fb = np.asarray(f_base, dtype=complex)
        s = complex(scalars)
        cx, cy, c0 = self.coeff_axis_x, self.coeff_axis_y, self.coeff_origin
        px, py, p0 = (
            self.coeff_axis_x_partner,
            self.coeff_axis_y_partner,
            self.coeff_origin_partner,
        )
        direct = (
            py * (cx * f1 + cy * fb + c0 * s) - cy * (px * f2 + py * fb + p0 * s)
        ) / (py * cx)
        stored = f1 - self.transition * f2 - self.inhomogeneity * s
        scale = 1.0 + np.max(np.abs(direct))
        return float(np.max(np.abs(stored - direct)) / scale)

    # -- serialization -----------------------------------------------------

    def to_payload(self) -> dict:
        """JSON-ready description of the condition (complex as [re, im])."""

        def arr(a):
            return [_pair_c(v) for v in np.asarray(a, dtype=complex)]

        def dct(d):
            return {k: arr(v) for k, v in d.items()}

        payload = {
            "cut_plane": self.trace.cut.plane,
            "cut_kind": self.trace.cut.kind,
            "cut_endpoints": [_pair_c(self.trace.cut.e1), _pair_c(self.trace.cut.e2)],
            "t": [float(v) for v in self.t],
            "base": arr(self.base),
            "loop": arr(self.x),
            "partner": arr(self.partner),
            "eliminated": self.eliminated,
            "part_of_system": bool(self.part_of_system),
            "loop_coefficients": dct(self.loop_coefficients),
            "partner_coefficients": dct(self.partner_coefficients),
            "base_coefficients": dct(self.base_coefficients),
            "scalar_coefficients": dct(self.scalar_coefficients),
        }
        if self.transition is not None:
            payload["transition"] = arr(self.transition)
            payload["inhomogeneity"] = arr(self.inhomogeneity)
        return payload


def derive_boundary_condition(
    fe: FunctionalEquation,
    trace: CurveTrace,
    t: np.ndarray | None = None,
) -> BoundaryCondition:
    """Eliminate one base-variable unknown between the two colliding roots.

    ``trace`` must be a traced loop over a cut.  For a cut of the vertical
    plane the loop lives in the horizontal plane: both roots share the same
    vertical value, so the first vertical unknown is eliminated and the
    relation couples the horizontal unknowns.  Cuts of the horizontal plane
    behave symmetrically.  When a single unknown per axis and one scalar
    remain, the normalized scalar form (``transition`` / ``inhomogeneity``)
    is populated; otherwise the condition is marked as part of a system.

    Optional ``t`` resamples the relation at arbitrary loop parameters.
    """
    if trace.cut.kind != "real":
        raise NumericalError(
            "boundary-condition",
            "loops over non-real cuts carry an involution that is not plain "
            "conjugation; their transplant is not provided",
        )
    if t is None:
        t = trace.theta
        chart_pts = trace.chart
    else:
        t = np.asarray(t, dtype=float)
        chart_pts = trig_interp(trace.chart, t)
        base = np.asarray(trace.cut.parametrize(t), dtype=complex)
        W = trace.chart_kernel
        dW = W.partial("x")
        # Guarded Newton polish onto the kernel fiber.  Near the collision
        # points the root is nearly double and the raw step 0/0 can fling the
        # iterate onto another sheet, so keep the interpolated value (already
        # spectrally accurate) unless the step is small and reduces |W|.
        for _ in range(3):
            f0 = W(chart_pts, base)
            dv = dW(chart_pts, base)
            dv = np.where(dv == 0, 1.0, dv)
            step = f0 / dv
            step = np.where(
                np.abs(step) < 0.05 * (1.0 + np.abs(chart_pts)), step, 0.0
            )
            cand = chart_pts - step
            better = np.abs(W(cand, base)) <= np.abs(f0)
            chart_pts = np.where(better, cand, chart_pts)
    base = np.asarray(trace.cut.parametrize(t), dtype=complex)

    if trace.chart_center is None:
        loop = np.asarray(chart_pts, dtype=complex)
    else:
        loop = trace.chart_center + 1.0 / np.asarray(chart_pts, dtype=complex)
    partner = np.conj(loop)

    b = fe.bounds
    plane = trace.cut.plane
    if plane == "y":
        # loop variable x; eliminate the first vertical unknown
        elim_gen = _class_gen(fe, "v_strip", (0,))
        loop_unknowns = [u for u in fe.unknown_functions if u.axis == "x"]
        base_unknowns = [u for u in fe.unknown_functions if u.axis == "y"][1:]
        scalar_single = b.i_minus == 1 and b.j_minus == 1 and len(
            fe.unknown_scalars
        ) == 1

        def at(samples):
            return lambda gen: gen(samples, base)

    elif plane == "x":
        # loop variable y; eliminate the first horizontal unknown
        elim_gen = _class_gen(fe, "h_strip", (0,))
        loop_unknowns = [u for u in fe.unknown_functions if u.axis == "y"]
        base_unknowns = [u for u in fe.unknown_functions if u.axis == "x"][1:]
        scalar_single = False

        def at(samples):
            return lambda gen: gen(base, samples)

    else:  # pragma: no cover - CutSegment guarantees 'x' or 'y'
        raise NumericalError("boundary-condition", f"unknown cut plane {plane!r}")

    ev_loop = at(loop)
    ev_partner = at(partner)

    d_loop = ev_loop(elim_gen)
    d_partner = ev_partner(elim_gen)

    def gen_of(u):
        return _class_gen(fe, "h_strip" if u.axis == "x" else "v_strip", (u.index,))

    loop_coeffs: dict[str, np.ndarray] = {}
    partner_coeffs: dict[str, np.ndarray] = {}
    for u in loop_unknowns:
        g = gen_of(u)
        loop_coeffs[str(u)] = d_partner * ev_loop(g)
        partner_coeffs[str(u)] = d_loop * ev_partner(g)
    base_coeffs: dict[str, np.ndarray] = {}
    for u in base_unknowns:
        g = gen_of(u)
        base_coeffs[str(u)] = d_partner * ev_loop(g) - d_loop * ev_partner(g)
    scalar_coeffs: dict[str, np.ndarray] = {}
    for pt in fe.unknown_scalars:
        g = _class_gen(fe, "point", pt)
        scalar_coeffs[f"pi_{pt[0]}_{pt[1]}"] = -(
            d_partner * ev_loop(g) - d_loop * ev_partner(g)
        )

    gh = _class_gen(fe, "h_strip", (0,))
    gv = _class_gen(fe, "v_strip", (0,))
    g0 = _class_gen(fe, "point", (0, 0))
    cx, cy, c0 = ev_loop(gh), ev_loop(gv), ev_loop(g0)
    px, py, p0 = ev_partner(gh), ev_partner(gv), ev_partner(g0)

    scale = max(gh.scale(), gv.scale())
    transition = None
    inhomogeneity = None
    if scalar_single:
        prod = cx * py
        worst = int(np.argmin(np.abs(prod)))
        if np.abs(prod[worst]) < (1e-10 * scale) ** 2:
            raise NumericalError(
                "boundary-condition",
                f"{SINGULAR_COEFFICIENT_MESSAGE}: |A| = "
                f"{abs(prod[worst]) ** 0.5:.3e} at t = {float(t[worst]):.6f} "
                f"(loop point {complex(loop[worst]):.6f})",
            )
        transition = (px * cy) / prod
        inhomogeneity = -(c0 * py - p0 * cy) / prod
    else:
        dmin = int(np.argmin(np.abs(np.concatenate([d_loop, d_partner]))))
        dval = np.abs(np.concatenate([d_loop, d_partner]))[dmin]
        if dval < 1e-10 * scale:
            raise NumericalError(
                "boundary-condition",
                f"{SINGULAR_COEFFICIENT_MESSAGE}: the eliminated unknown's "
                f"coefficient has magnitude {dval:.3e} on the loop",
            )

    return BoundaryCondition(
        trace=trace,
        t=np.asarray(t, dtype=float),
        x=loop,
        partner=partner,
        base=base,
        coeff_axis_x=cx,
        coeff_axis_y=cy,
        coeff_origin=c0,
        coeff_axis_x_partner=px,
        coeff_axis_y_partner=py,
        coeff_origin_partner=p0,
        eliminated=str(
            [u for u in fe.unknown_functions if u.axis == ("y" if plane == "y" else "x")][0]
        ),
        loop_coefficients=loop_coeffs,
        partner_coefficients=partner_coeffs,
        base_coefficients=base_coeffs,
        scalar_coefficients=scalar_coeffs,
        part_of_system=not scalar_single,
        transition=transition,
        inhomogeneity=inhomogeneity,
    )


def condition_identity_residual(
    fe: FunctionalEquation, bc: BoundaryCondition, test_functions: dict
) -> float:
    """Bookkeeping contract of an assembled (possibly vector) condition.

    ``test_functions`` maps unknown-function names to arbitrary smooth
    callables and scalar names to numbers.  Applying the stored coefficient
    rows to the test data must reproduce the direct elimination of the same
    two functional-equation instances evaluated from the generators.
    """
    plane = bc.trace.cut.plane
    if plane == "y":
        elim_gen = _class_gen(fe, "v_strip", (0,))

        def at(samples):
            return lambda gen: gen(samples, bc.base)

        def arg_of(u):
            return bc.base if u.axis == "y" else None

    else:
        elim_gen = _class_gen(fe, "h_strip", (0,))

        def at(samples):
            return lambda gen: gen(bc.base, samples)

        def arg_of(u):
            return bc.base if u.axis == "x" else None

    ev_loop = at(bc.x)
    ev_partner = at(bc.partner)
    d_loop = ev_loop(elim_gen)
    d_partner = ev_partner(elim_gen)

    def gen_of(u):
        return _class_gen(fe, "h_strip" if u.axis == "x" else "v_strip", (u.index,))

    # direct elimination: d_partner * instance(loop) - d_loop * instance(partner),
    # with the test data substituted for every unknown
    direct = np.zeros(bc.size, dtype=complex)
    assembled = np.zeros(bc.size, dtype=complex)
    for u in fe.unknown_functions:
        name = str(u)
        g = gen_of(u)
        func = test_functions[name]
        base_arg = arg_of(u)
        if base_arg is None:
            vals_loop = np.asarray(func(bc.x), dtype=complex)
            vals_partner = np.asarray(func(bc.partner), dtype=complex)
        else:
            vals_loop = vals_partner = np.asarray(func(base_arg), dtype=complex)
        direct += d_partner * ev_loop(g) * vals_loop
        direct -= d_loop * ev_partner(g) * vals_partner
        if name == bc.eliminated:
            continue
        if name in bc.loop_coefficients:
            assembled += bc.loop_coefficients[name] * vals_loop
            assembled -= bc.partner_coefficients[name] * vals_partner
        else:
            assembled += bc.base_coefficients[name] * vals_loop
    for pt in fe.unknown_scalars:
        name = f"pi_{pt[0]}_{pt[1]}"
        g = _class_gen(fe, "point", pt)
        s = complex(test_functions[name])
        direct += (d_partner * ev_loop(g) - d_loop * ev_partner(g)) * s
        assembled -= bc.scalar_coefficients[name] * s
    scale = 1.0 + float(np.max(np.abs(direct)))
    return float(np.max(np.abs(assembled - direct)) / scale)


def assemble_vector_bvp(fe: FunctionalEquation, curves) -> list[BoundaryCondition]:
    """Assemble the coupled boundary conditions of a wide-negative-jump walk.

    ``curves`` supplies one traced loop per interior cut, all over cuts of
    the same plane; each yields one condition by eliminating the first
    unknown of the base variable between the colliding root pair.  The
    number of curves must equal the number of loop-variable unknowns (the
    negative jump amplitude of the complementary direction).  For models
    with a single unknown the one condition coincides with
    :func:`derive_boundary_condition`.
    """
    traces = []
    for entry in curves:
        if isinstance(entry, CurveTrace):
            traces.append(entry)
        else:  # (cut, trace, report) triples from validated_cuts
            traces.append(entry[1])
    if not traces:
        raise NumericalError(
            "vector-bvp", "no curves supplied; need one per interior cut"
        )
    planes = {tr.cut.plane for tr in traces}
    if len(planes) != 1:
        raise ModelError(f"curves mix cut planes {sorted(planes)}")
    plane = planes.pop()
    needed = fe.bounds.i_minus if plane == "x" else fe.bounds.j_minus
    if len(traces) != needed:
        raise NumericalError(
            "vector-bvp",
            f"need {needed} curves (one per interior cut of the {plane}-plane "
            f"carrying one unknown each), got {len(traces)}",
        )
    return [derive_boundary_condition(fe, tr) for tr in traces]


# ---------------------------------------------------------------------------
# Series utilities.


def estimated_radius(coeffs: np.ndarray) -> float:
    """Convergence radius estimate from the tail decay of series coefficients."""
    mags = np.abs(np.asarray(coeffs, dtype=float))
    keep = np.nonzero(mags > 1e-300)[0]
    if len(keep) < 4:
        return np.inf
    idx = keep[max(1, len(keep) // 3) :]
    if len(idx) < 3:
        idx = keep[1:]
    slope = np.polyfit(idx, np.log(mags[idx]), 1)[0]
    if slope >= 0.0:
        return 1.0
    return float(np.exp(-slope))


def truncated_series(coeffs: np.ndarray):
    """Horner evaluator of a truncated power series (complex arguments)."""
    c = np.asarray(coeffs, dtype=complex)

    def ev(z):
        z = np.asarray(z, dtype=complex)
        acc = np.zeros_like(z)
        for v in c[::-1]:
            acc = acc * z + v
        return acc

    return ev


def _truncate_noise(coeffs: np.ndarray) -> np.ndarray:
    """Zero series coefficients once they hit the numerical noise floor.

    Extraction from circle data amplifies sample noise geometrically with
    the order, so the magnitudes first decay then rebound; the deepest
    point of that V marks the crossover, and everything beyond it is
    noise.  Arrays that decay all the way down keep their full length.
    """
    c = np.array(coeffs, copy=True)
    mags = np.abs(c)
    if not len(mags) or float(np.max(mags)) == 0.0:
        return c
    k_min = int(np.argmin(np.where(mags > 0.0, mags, np.inf)))
    tail = mags[k_min:]
    if len(tail) > 3 and float(np.max(tail)) > 10.0 * float(mags[k_min]):
        c[k_min + 1 :] = 0.0
    top = float(np.max(np.abs(c)))
    c[np.abs(c) < 1e-16 * top] = 0.0
    return c


def _enclosed_roots(
    P: BivariatePolynomial, trace: CurveTrace, loop_fine: np.ndarray, y: complex
) -> list[complex]:
    """Kernel roots in x over ``y`` that lie inside the traced loop.

    The winding test runs against an upsampled copy of the loop so that roots
    passing close to the boundary (they do, for base points near the cut) are
    still classified reliably.
    """
    roots = P.fiber("y", complex(y)).roots()
    ahead = np.roll(loop_fine, -1)
    chosen = []
    for r in roots:
        if trace.chart_center is None:
            zc = complex(r)
        else:
            if r == trace.chart_center:
                continue
            zc = 1.0 / (complex(r) - trace.chart_center)
        if np.min(np.abs(loop_fine - zc)) < 1e-10:
            continue
        w = int(round(float(np.sum(np.angle((ahead - zc) / (loop_fine - zc)))) / TWO_PI))
        if w != 0:
            chosen.append(complex(r))
    return chosen


# ---------------------------------------------------------------------------
# Problem preparation: cut selection, gluing, singular-set discovery.


@dataclass
class _Prepared:
    """Geometry and singular-set data shared by every collocation rung."""

    fe: FunctionalEquation
    P: BivariatePolynomial
    gen_x: BivariatePolynomial
    gen_y: BivariatePolynomial
    gen_0: BivariatePolynomial
    trace: CurveTrace
    disk_map: DiskMap
    loop_fine: np.ndarray
    kernel_scale: float
    axis_pole_pairs: list[tuple[complex, complex]]
    companion_poles: list[complex]
    induced_poles: list[complex]
    outer_branch_points: list[complex]
    factors: list[complex]
    condition_points: list[tuple[complex, complex]]

    def chart(self, x):
        if self.trace.chart_center is None:
            return np.asarray(x, dtype=complex)
        return 1.0 / (np.asarray(x, dtype=complex) - self.trace.chart_center)

    def to_disk(self, x):
        return np.asarray(self.disk_map(self.chart(x)), dtype=complex)

    def enclosed(self, xp: complex) -> bool:
        zc = complex(self.chart(xp))
        if not np.isfinite(zc):
            return False
        if np.min(np.abs(self.loop_fine - zc)) < 1e-9:
            return False
        ahead = np.roll(self.loop_fine, -1)
        w = float(
            np.sum(np.angle((ahead - zc) / (self.loop_fine - zc))) / TWO_PI
        )
        return abs(round(w)) >= 1


def _discover_axis_poles(prep: _Prepared) -> list[tuple[complex, complex]]:
    """Common zeros of the horizontal generator and the kernel that the
    continued horizontal axis function must carry as poles.

    Realized on the small vertical branch, beyond the closed unit disk,
    enclosed by the loop, and nonremovable (the rest of the relation does
    not vanish with it)."""
    out = []
    res = resultant(prep.P, prep.gen_x, eliminate="y")
    for x0 in res.roots():
        if not np.isfinite(x0) or abs(x0) <= 1 + 1e-9:
            continue
        yr = prep.P.fiber("x", complex(x0)).roots()
        if not len(yr):
            continue
        ysm = yr[int(np.argmin(np.abs(yr)))]
        if abs(ysm) < 1e-8:
            continue
        if abs(complex(prep.gen_x(x0, ysm))) > 1e-7 * prep.kernel_scale:
            continue  # common zero not realized on the small branch
        if (
            abs(complex(prep.gen_y(x0, ysm))) < 1e-10 * prep.kernel_scale
            and abs(complex(prep.gen_0(x0, ysm))) < 1e-10 * prep.kernel_scale
        ):
            continue  # removable: the whole relation degenerates there
        if not prep.enclosed(complex(x0)):
            continue
        out.append((complex(x0), complex(ysm)))
    return out


def _discover_companion_poles(prep: _Prepared) -> list[complex]:
    """Mirror rule on the vertical side: common zeros of the vertical
    generator and the kernel on the small horizontal branch, beyond the
    closed unit disk.  These are poles of the back-substituted vertical
    function; they matter through the positions they induce in the
    horizontal plane."""
    out = []
    res = resultant(prep.P, prep.gen_y, eliminate="x")
    for y0 in res.roots():
        if not np.isfinite(y0) or abs(y0) <= 1 + 1e-9:
            continue
        xr = prep.P.fiber("y", complex(y0)).roots()
        if not len(xr):
            continue
        xsm = xr[int(np.argmin(np.abs(xr)))]
        if abs(xsm) < 1e-8:
            continue
        if abs(complex(prep.gen_y(xsm, y0))) > 1e-7 * prep.kernel_scale:
            continue
        if (
            abs(complex(prep.gen_x(xsm, y0))) < 1e-10 * prep.kernel_scale
            and abs(complex(prep.gen_0(xsm, y0))) < 1e-10 * prep.kernel_scale
        ):
            continue
        out.append(complex(y0))
    return out


def _discover_induced_poles(
    prep: _Prepared,
    axis_poles: list[tuple[complex, complex]],
    companion_poles: list[complex],
) -> list[complex]:
    """One generation of pole induction through the kernel fiber.

    Over a vertical-side pole the restricted relation forces the horizontal
    function to blow up at every enclosed fiber point where the vertical
    coefficient stays away from zero.  One generation suffices: the induced
    positions sit further out, and their own images either leave the loop
    or are already covered by discovered poles and branch points."""
    known = [p for p, _ in axis_poles]
    out: list[complex] = []
    for yp in companion_poles:
        for xr in prep.P.fiber("y", yp).roots():
            xr = complex(xr)
            if abs(xr) <= 1 + 1e-9:
                continue  # the axis series itself is analytic on the closed disk
            if any(abs(xr - k) < 1e-6 for k in known + out):
                continue
            if abs(complex(prep.gen_y(xr, yp))) < 1e-7 * prep.kernel_scale:
                continue  # safe: the diverging factor's coefficient vanishes
            if not prep.enclosed(xr):
                continue
            out.append(xr)
    return out


def _discover_outer_branch_points(
    prep: _Prepared, x_branch_points: list[complex]
) -> list[complex]:
    """Enclosed fiber-degeneracy points beyond the closed unit disk.

    The analytic continuation of the axis function genuinely branches
    there; a clearing factor with a zero at each point suppresses the cut
    content to collocation accuracy."""
    out = []
    for loc in x_branch_points:
        if abs(loc) <= 1 + 1e-9 or not prep.enclosed(loc):
            continue
        out.append(loc)
    return out


def _discover_condition_points(prep: _Prepared) -> list[tuple[complex, complex]]:
    """Interior interpolation conditions closing the collocation system.

    At enclosed fiber points over common zeros of the vertical generator
    and the kernel inside the unit vertical disk, the vertical unknown
    drops out of the restricted relation, pinning the horizontal function:
    gen_x * h + gen_0 = 0 there."""
    out = []
    res = resultant(prep.P, prep.gen_y, eliminate="x")
    for y0 in res.roots():
        if not (1e-8 < abs(y0) < 1 - 1e-3):
            continue
        for xr in prep.P.fiber("y", complex(y0)).roots():
            xr = complex(xr)
            if abs(xr) < 1e-8:
                continue
            if abs(complex(prep.gen_y(xr, y0))) > 1e-7 * prep.kernel_scale:
                continue
            if (
                abs(complex(prep.gen_x(xr, y0))) < 1e-10 * prep.kernel_scale
                and abs(complex(prep.gen_0(xr, y0))) < 1e-10 * prep.kernel_scale
            ):
                continue
            if not prep.enclosed(xr):
                continue
            out.append((xr, complex(y0)))
    return out


def _prepare(
    fe: FunctionalEquation,
    samples: int = 512,
    trace: CurveTrace | None = None,
    glue: DiskMap | None = None,
) -> _Prepared:
    """Validate geometry and discover the singular set for the scalar solve."""
    _require_unit_negative(fe)
    P = kernel_from_model(fe)
    gen_x = _class_gen(fe, "h_strip", (0,))
    gen_y = _class_gen(fe, "v_strip", (0,))
    gen_0 = _class_gen(fe, "point", (0, 0))

    # Ergodicity screen: a fiber degeneracy colliding with the fixed point 1
    # of either plane is the zero-drift signature; the interior cut then
    # touches the unit circle and no stationary law exists.
    x_branch = [complex(b.location) for b in find_branch_points(P, "x")]
    y_branch = [complex(b.location) for b in find_branch_points(P, "y")]
    for plane, pts in (("x", x_branch), ("y", y_branch)):
        for loc in pts:
            if abs(loc - 1.0) < 1e-6:
                raise NumericalError(
                    "stationary-solve",
                    f"{NOT_ERGODIC_MESSAGE}: branch point at {loc:.8f} in the "
                    f"{plane}-plane collides with the unit-circle fixed point",
                )

    if trace is None:
        accepted = validated_cuts(P, "y", samples=samples)
        real = [(c, tr) for c, tr, _ in accepted if c.kind == "real"]
        if len(real) != 1:
            desc = "; ".join(
                f"{c.kind} cut {c.e1:.6f}..{c.e2:.6f}" for c, _, _ in accepted
            )
            raise NumericalError(
                "stationary-solve",
                "ambiguous interior cut selection: expected exactly one "
                f"validated real cut of the vertical plane, found {len(real)}"
                + (f"; candidates: {desc}" if desc else "; no validated cuts"),
            )
        trace = real[0][1]

    if glue is None:
        disk_map = disk_map_from_trace(trace)
        if 0.0 < abs(disk_map.center.imag) < 1e-6:
            # conjugation-symmetric domain; scrub roundoff off the center so
            # the glued map commutes with conjugation to machine precision
            disk_map = disk_map_from_trace(trace, center=complex(disk_map.center.real))
    else:
        disk_map = glue

    prep = _Prepared(
        fe=fe,
        P=P,
        gen_x=gen_x,
        gen_y=gen_y,
        gen_0=gen_0,
        trace=trace,
        disk_map=disk_map,
        loop_fine=upsample_periodic(trace.chart, 16),
        kernel_scale=P.scale(),
        axis_pole_pairs=[],
        companion_poles=[],
        induced_poles=[],
        outer_branch_points=[],
        factors=[],
        condition_points=[],
    )
    prep.axis_pole_pairs = _discover_axis_poles(prep)
    prep.companion_poles = _discover_companion_poles(prep)
    prep.induced_poles = _discover_induced_poles(
        prep, prep.axis_pole_pairs, prep.companion_poles
    )
    prep.outer_branch_points = _discover_outer_branch_points(prep, x_branch)
    singular = (
        [p for p, _ in prep.axis_pole_pairs]
        + prep.induced_poles
        + prep.outer_branch_points
    )
    factors = [complex(prep.to_disk(p)) for p in singular]
    prep.factors = [f for f in factors if abs(f) < 1 - 1e-8]
    prep.condition_points = _discover_condition_points(prep)
    return prep


# ---------------------------------------------------------------------------
# Cleared collocation.


@dataclass
class _Collocation:
    """One collocation rung: solved coefficients plus linear-algebra stats."""

    n: int
    basis_size: int
    coef_full: np.ndarray
    disk_origin: complex
    boundary_residual: float
    rank: int
    sv_ratio: float
    condition_correction: float
    cleared_winding: float
    bc: BoundaryCondition


def _clearing_values(factors: list[complex], z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    out = np.ones_like(z)
    for f in factors:
        out = out * (z - f)
    return out


def _collocate(prep: _Prepared, n: int) -> _Collocation:
    theta = TWO_PI * np.arange(n) / n
    t_of = prep.disk_map.parameter_of_angle(theta)
    bc = derive_boundary_condition(prep.fe, prep.trace, t=t_of)
    if bc.transition is None:  # pragma: no cover - guarded by _require_unit_negative
        raise NumericalError("stationary-solve", "scalar reduction unavailable")
    G = bc.transition
    rho = bc.inhomogeneity
    zeta = np.exp(1j * theta)
    zeta0 = complex(prep.to_disk(0.0))

    clear_on_circle = _clearing_values(prep.factors, zeta)
    G_cleared = G * clear_on_circle / np.conj(clear_on_circle)
    rhs_boundary = rho * clear_on_circle
    cleared_winding = BoundaryCondition._winding(G_cleared)

    K = min(384, n // 2 - 1)
    ks = np.arange(1, K + 1)
    cols = zeta[:, None] ** ks[None, :] - zeta0 ** ks[None, :]
    M = cols - G_cleared[:, None] * np.conj(cols)
    A_rows = [M.real, M.imag]
    b_rows = [rhs_boundary.real, rhs_boundary.imag]

    # interpolation conditions at interior common zeros
    cond_rows: list[tuple[np.ndarray, complex]] = []
    for xs, ys in prep.condition_points:
        zst = complex(prep.to_disk(xs))
        brow = (zst**ks - zeta0**ks) * (
            complex(prep.gen_x(xs, ys)) / complex(_clearing_values(prep.factors, zst))
        )
        rval = -complex(prep.gen_0(xs, ys))
        nrm = max(float(np.max(np.abs(brow))), 1e-30)
        w = np.sqrt(n) / nrm
        A_rows += [w * brow.real[None, :], w * brow.imag[None, :]]
        b_rows += [np.array([w * rval.real]), np.array([w * rval.imag])]
        cond_rows.append((brow, rval))

    # analyticity of the back-substituted vertical function: its negative
    # Fourier modes on a circle inside the unit vertical disk must vanish
    m_v = 256
    r_v = 0.45
    th_v = TWO_PI * (np.arange(m_v) + 0.5) / m_v
    y_v = r_v * np.exp(1j * th_v)
    alpha = np.zeros((m_v, K), dtype=complex)
    beta = np.zeros(m_v, dtype=complex)
    ok = np.ones(m_v, dtype=bool)
    for i, y in enumerate(y_v):
        roots = _enclosed_roots(prep.P, prep.trace, prep.loop_fine, y)
        if not roots:
            ok[i] = False
            continue
        r = roots[int(np.argmin(np.abs(np.asarray(roots))))]
        z_i = complex(prep.to_disk(r))
        Bv = (z_i**ks - zeta0**ks) / complex(_clearing_values(prep.factors, z_i))
        gv_i = complex(prep.gen_y(r, y))
        alpha[i] = -(complex(prep.gen_x(r, y)) / gv_i) * Bv
        beta[i] = -complex(prep.gen_0(r, y)) / gv_i
    if int(ok.sum()) < m_v // 4:
        raise NumericalError(
            "stationary-solve",
            "too few usable back-substitution points for the analyticity rows",
        )
    alpha = alpha[ok]
    beta = beta[ok]
    th_ok = th_v[ok]
    m_ok = len(th_ok)
    j_neg = 48
    w_v = np.sqrt(n) / max(float(np.max(np.abs(alpha))), 1e-30)
    for j in range(0, j_neg + 1):
        ph = np.exp(1j * j * th_ok) / m_ok
        row = ph @ alpha
        rv = -(ph @ beta)
        A_rows += [w_v * row.real[None, :], w_v * row.imag[None, :]]
        b_rows += [np.array([w_v * rv.real]), np.array([w_v * rv.imag])]

    A = np.concatenate(A_rows, axis=0)
    b = np.concatenate(b_rows)
    coef, _, rank, sv = np.linalg.lstsq(A, b, rcond=None)
    solved = cols @ coef
    bres = float(
        np.max(np.abs(solved - G_cleared * np.conj(solved) - rhs_boundary))
        / (1.0 + float(np.max(np.abs(solved))))
    )

    # hard-enforce the interpolation conditions by minimal-norm correction
    corr_norm = 0.0
    if cond_rows:
        Ah = np.concatenate(
            [
                np.concatenate([r.real[None, :], r.imag[None, :]], axis=0)
                for r, _ in cond_rows
            ],
            axis=0,
        )
        resid_h = np.concatenate(
            [
                [v.real - float(r.real @ coef), v.imag - float(r.imag @ coef)]
                for r, v in cond_rows
            ]
        )
        norms = np.linalg.norm(Ah, axis=1)
        keep = norms > 1e-12 * float(np.max(norms))
        Ah, resid_h = Ah[keep], resid_h[keep]
        if len(Ah):
            corr = Ah.T @ np.linalg.pinv(Ah @ Ah.T, rcond=1e-12) @ resid_h
            coef = coef + corr
            corr_norm = float(np.linalg.norm(corr))

    coef_full = np.concatenate([[-(coef @ (zeta0**ks))], coef])
    return _Collocation(
        n=n,
        basis_size=K,
        coef_full=coef_full,
        disk_origin=zeta0,
        boundary_residual=bres,
        rank=int(rank),
        sv_ratio=float(sv[-1] / sv[0]) if len(sv) else 0.0,
        condition_correction=corr_norm,
        cleared_winding=cleared_winding,
        bc=bc,
    )


def _axis_evaluators(prep: _Prepared, rung: _Collocation):
    """Per-unit evaluators of the two axis functions (origin mass = 1)."""
    coef_full = rung.coef_full
    factors = prep.factors
    spread_cell = [0.0]

    def horizontal(x_points):
        z = prep.to_disk(np.atleast_1d(np.asarray(x_points, dtype=complex)))
        return npoly.polyval(z, coef_full) / _clearing_values(factors, z)

    def vertical(y_points, resolution_margin=0.0):
        y_points = np.atleast_1d(np.asarray(y_points, dtype=complex))
        out = np.empty(len(y_points), dtype=complex)
        for i, y in enumerate(y_points):
            roots = _enclosed_roots(prep.P, prep.trace, prep.loop_fine, y)
            if resolution_margin > 0.0 and roots:
                # Roots whose disk image crowds the unit circle sit at the
                # numerical resolution limit of the boundary representation;
                # treat them as unusable rather than return a degraded value.
                roots = [
                    r
                    for r in roots
                    if abs(complex(prep.to_disk(r))) <= 1.0 - resolution_margin
                ]
            if not roots:
                raise NumericalError(
                    "stationary-solve",
                    f"no kernel root over y={complex(y):.6f} lies inside the loop",
                )
            roots = np.asarray(roots)
            hx = horizontal(roots)
            gv = prep.gen_y(roots, y)
            if float(np.min(np.abs(gv))) < 1e-10 * prep.kernel_scale:
                raise NumericalError(
                    "stationary-solve",
                    "vertical coefficient vanishes at a back-substitution point",
                )
            vals = -(prep.gen_x(roots, y) * hx + prep.gen_0(roots, y)) / gv
            pick = int(np.argmin(np.abs(roots)))
            out[i] = vals[pick]
            if len(vals) > 1:
                spread = float(np.max(np.abs(vals - out[i])))
                spread_cell[0] = max(
                    spread_cell[0], spread / (1.0 + abs(out[i]))
                )
        return out

    return horizontal, vertical, spread_cell


def _ring(center: complex, delta: float, m: int) -> np.ndarray:
    return center + delta * np.exp(1j * TWO_PI * (np.arange(m) + 0.5) / m)


def _mass_pieces(prep: _Prepared, horizontal, vertical, delta: float, m: int):
    """Cauchy means around (1, 1): per-unit axis and interior totals."""
    ring = _ring(1.0, delta, m)
    h1 = float(np.mean(horizontal(ring)).real)
    v1 = float(np.mean(vertical(ring)).real)
    pint_ring = -(
        prep.gen_x(ring, 1.0) * horizontal(ring)
        + prep.gen_y(ring, 1.0) * v1
        + prep.gen_0(ring, 1.0)
    ) / prep.P(ring, 1.0)
    p11 = float(np.mean(pint_ring).real)
    total = 1.0 + h1 + v1 + p11
    if not np.isfinite(total) or total <= 0.0:
        raise NumericalError(
            "stationary-solve",
            f"{NOT_ERGODIC_MESSAGE}: normalization mass {total:.6g} is not positive",
        )
    return h1, v1, p11, total


# ---------------------------------------------------------------------------
# Solution bundle.


@dataclass
class SolveDiagnostics:
    """Numerical health report of one stationary solve."""

    index_winding: float
    transition_winding: float
    cleared_winding: float
    factor_count: int
    samples: int
    basis_size: int
    rank: int
    sv_ratio: float
    boundary_residual: float
    condition_correction: float
    refinement_delta: float
    mass_defect: float
    window_mass: float
    fe_residual: float
    radius_agreement: float
    back_substitution_spread: float


@dataclass
class SolutionBundle:
    """Stationary law of a unit-negative-jump walk from the analytic solve.

    ``pi_x`` evaluates the horizontal axis series ``sum_i pi[i,0] z**i``
    (origin term excluded; it is ``pi00``), ``pi_y`` the vertical series,
    both already normalized to total mass one.  ``coefficients(order)``
    tabulates the masses, ``mass(i, j)`` looks one up, and
    ``residual_report`` stores the functional-equation residual of the
    extracted series over a test grid in the open bidisc together with the
    main solve statistics.
    """

    model: WalkModel
    pi00: float
    axis_x: np.ndarray
    axis_y: np.ndarray
    block: np.ndarray
    residual_report: dict
    diagnostics: SolveDiagnostics
    condition: BoundaryCondition = field(repr=False)
    disk_map: DiskMap = field(repr=False)
    _prep: _Prepared = field(repr=False)
    _horizontal: object = field(repr=False)
    _vertical: object = field(repr=False)

    # -- table access ------------------------------------------------------

    def coefficients(self, order: int = 10) -> np.ndarray:
        """Masses ``pi[i, j]`` for ``0 <= i, j <= order`` as a dense table."""
        cap = min(len(self.axis_x), len(self.axis_y), *self.block.shape)
        if order > cap:
            raise ValueError(f"order {order} beyond extracted range {cap}")
        T = np.zeros((order + 1, order + 1))
        T[0, 0] = self.pi00
        if order:
            T[1:, 0] = self.axis_x[:order]
            T[0, 1:] = self.axis_y[:order]
            T[1:, 1:] = self.block[:order, :order]
        return T

    def mass(self, i: int, j: int) -> float:
        if i == 0 and j == 0:
            return self.pi00
        if j == 0:
            return float(self.axis_x[i - 1]) if i - 1 < len(self.axis_x) else 0.0
        if i == 0:
            return float(self.axis_y[j - 1]) if j - 1 < len(self.axis_y) else 0.0
        a, b = i - 1, j - 1
        if a < self.block.shape[0] and b < self.block.shape[1]:
            return float(self.block[a, b])
        return 0.0

    def total_mass(self) -> float:
        """Sum of every extracted mass (1 minus the truncation tail)."""
        return float(
            self.pi00 + self.axis_x.sum() + self.axis_y.sum() + self.block.sum()
        )

    # -- evaluators --------------------------------------------------------

    #: disk-radius band treated as "numerically on the contour": inside it
    #: the discrete Cauchy representation of the boundary data no longer
    #: resolves the evaluation point.
    _RESOLUTION_MARGIN = 1e-3

    def pi_x(self, z):
        """Normalized horizontal axis series at ``z`` (analytic inside the loop)."""
        pts = np.atleast_1d(np.asarray(z, dtype=complex))
        for p in pts:
            if not self._prep.enclosed(complex(p)):
                raise NumericalError("evaluation", ON_CONTOUR_MESSAGE)
            if abs(complex(self._prep.to_disk(p))) > 1.0 - self._RESOLUTION_MARGIN:
                raise NumericalError("evaluation", ON_CONTOUR_MESSAGE)
        vals = self.pi00 * self._horizontal(pts)
        return complex(vals[0]) if np.isscalar(z) or np.ndim(z) == 0 else vals

    def pi_y(self, z):
        """Normalized vertical axis series at ``z``.

        Points well inside the disk use the extracted series directly; the
        rest back-substitute through the kernel fiber, refusing roots that
        crowd the boundary representation (they land on the traced curve,
        which happens exactly when ``z`` sits on the branch cut).
        """
        pts = np.atleast_1d(np.asarray(z, dtype=complex))
        out = np.empty(len(pts), dtype=complex)
        series = truncated_series(np.concatenate([[0.0], self.axis_y]))
        for i, p in enumerate(pts):
            try:
                out[i] = (
                    self.pi00
                    * self._vertical(
                        np.array([p]), resolution_margin=self._RESOLUTION_MARGIN
                    )[0]
                )
            except NumericalError:
                if abs(p) < 0.95:
                    out[i] = complex(series(p))
                else:
                    raise NumericalError("evaluation", ON_CONTOUR_MESSAGE) from None
        return complex(out[0]) if np.isscalar(z) or np.ndim(z) == 0 else out


def _plateau_floor(spec_abs: np.ndarray) -> float:
    """Noise floor of a truncated Taylor spectrum (positive modes only).

    By the top of the retained frequency range the genuine coefficients
    have decayed far below the evaluator noise, so the trailing-band
    maximum measures the plateau; anything within a safety factor of it
    is indistinguishable from noise.
    """
    n = len(spec_abs)
    band = spec_abs[n - n // 8 :]
    plateau = float(np.max(band)) if len(band) else 0.0
    return max(20.0 * plateau, 1e-15 * float(np.max(spec_abs)))


def _floor_spectrum_2d(spec: np.ndarray) -> np.ndarray:
    """Zero torus-spectrum entries below their local noise level.

    Kernel zeros close to the sampling torus smear evaluator noise slowly
    across one frequency while the other stays low, so the noise level is
    strongly anisotropic; each row and column gets its own floor from its
    own trailing band, and an entry must clear both to survive.
    """
    aspec = np.abs(spec)
    nr, nc = aspec.shape
    row_floor = 20.0 * aspec[:, nc - nc // 8 :].max(axis=1)
    col_floor = 20.0 * aspec[nr - nr // 8 :, :].max(axis=0)
    global_floor = 1e-15 * float(aspec.max())
    mask = (aspec < np.maximum(row_floor[:, None], global_floor)) | (
        aspec < np.maximum(col_floor[None, :], global_floor)
    )
    out = spec.copy()
    out[mask] = 0.0
    return out


def _extract_bundle(
    prep: _Prepared,
    rung: _Collocation,
    horizontal,
    vertical,
    spread_cell,
    refinement_delta: float,
    index_winding: float,
) -> SolutionBundle:
    # normalization by total mass one, cross-checked on a second ring
    h1, v1, p11, total = _mass_pieces(prep, horizontal, vertical, 0.04, 32)
    pi00 = 1.0 / total
    _, _, _, total2 = _mass_pieces(prep, horizontal, vertical, 0.02, 48)
    mass_defect = abs(pi00 * total2 - 1.0)

    # horizontal axis coefficients: 512-point trapezoid rule on a circle.
    # Spectral entries below the sample noise floor (estimated from the
    # Nyquist band, where the true coefficients have long decayed) are
    # zeroed before the radius powers blow them up into fake high-order
    # coefficients.
    m_ax = 512
    half = m_ax // 2
    r_x = 0.9
    th = TWO_PI * np.arange(m_ax) / m_ax
    xs = r_x * np.exp(1j * th)
    h_vals = horizontal(xs)
    h_spec = (np.fft.fft(h_vals) / m_ax)[:half]
    h_spec[np.abs(h_spec) < _plateau_floor(np.abs(h_spec))] = 0.0
    h_coef = np.real(h_spec / r_x ** np.arange(half))

    # vertical axis coefficients: the circle stays outside the radius band
    # swept by the cut (where fiber-root classification is ambiguous), and
    # the half-offset grid keeps samples off the real axis; the offset
    # shows up as a phase on the extracted modes
    cut_r = max(abs(prep.trace.cut.e1), abs(prep.trace.cut.e2))
    r_y = 0.9 if cut_r <= 0.8 else min(0.99, 0.5 * (cut_r + 1.0))
    th_v = TWO_PI * (np.arange(m_ax) + 0.5) / m_ax
    ys = r_y * np.exp(1j * th_v)
    v_vals = vertical(ys)
    v_spec = (np.fft.fft(v_vals) / m_ax * np.exp(-1j * th_v[0] * np.arange(m_ax)))[
        :half
    ]
    v_spec[np.abs(v_spec) < _plateau_floor(np.abs(v_spec))] = 0.0
    v_coef = np.real(v_spec / r_y ** np.arange(half))
    v_coef[0] = 0.0

    # interior block on a torus; the vertical values come from the series
    # just extracted (clean of classification flips at any smaller radius)
    grid = 512
    r_b = 0.85
    tx = TWO_PI * np.arange(grid) / grid
    ty = TWO_PI * (np.arange(grid) + 0.5) / grid
    gx = r_b * np.exp(1j * tx)
    gy = r_b * np.exp(1j * ty)
    hx = horizontal(gx)
    vy = npoly.polyval(gy, _truncate_noise(v_coef))
    Pint = -(
        prep.gen_x(gx[:, None], gy[None, :]) * hx[:, None]
        + prep.gen_y(gx[:, None], gy[None, :]) * vy[None, :]
        + prep.gen_0(gx[:, None], gy[None, :])
    ) / prep.P(gx[:, None], gy[None, :])
    half_g = grid // 2
    spec = np.fft.fft2(Pint) / grid**2
    spec = spec * np.exp(-1j * ty[0] * np.arange(grid))[None, :]
    spec = _floor_spectrum_2d(spec[:half_g, :half_g])
    spec = spec / r_b ** np.arange(half_g)[:, None]
    spec = spec / r_b ** np.arange(half_g)[None, :]
    raw_block = np.real(spec)

    axis_x = np.real(pi00 * _truncate_noise(h_coef[1:]))
    axis_y = np.real(pi00 * _truncate_noise(v_coef[1:]))
    block = pi00 * raw_block[1:, 1:].copy()
    block[np.abs(block) < 1e-16 * float(np.max(np.abs(block)))] = 0.0
    row_keep = np.abs(block).max(axis=1) > 0.0
    col_keep = np.abs(block).max(axis=0) > 0.0

    window_mass = float(pi00 + axis_x.sum() + axis_y.sum() + block.sum())

    # analyticity invariant: coefficients re-extracted on two circles agree
    agree = []
    for r_probe in (0.5, 0.8):
        vals = horizontal(r_probe * np.exp(1j * th))
        agree.append(
            np.real(np.fft.fft(vals) / m_ax / r_probe ** np.arange(m_ax))[1:13]
        )
    radius_agreement = float(np.max(np.abs(agree[0] - agree[1])))

    # functional-equation residual of the truncated series on a 20 x 20 grid
    h_series = truncated_series(np.concatenate([[0.0], axis_x]))
    v_series = truncated_series(np.concatenate([[0.0], axis_y]))
    nz_r = int(np.max(np.nonzero(row_keep)[0])) + 1 if row_keep.any() else 0
    nz_c = int(np.max(np.nonzero(col_keep)[0])) + 1 if col_keep.any() else 0

    def block_series(xv, yv):
        # Horner over the truncated block (rows/cols already noise-zeroed)
        acc = np.zeros(np.broadcast(xv, yv).shape, dtype=complex)
        for a in range(nz_r - 1, -1, -1):
            inner = np.zeros_like(acc)
            for c in range(nz_c - 1, -1, -1):
                inner = inner * yv + block[a, c]
            acc = acc * xv + inner * yv
        return acc * xv

    tg = TWO_PI * np.arange(20) / 20
    gx20 = 0.45 * np.exp(1j * tg)
    gy20 = 0.45 * np.exp(1j * (tg + np.pi / 20))
    X20, Y20 = gx20[:, None], gy20[None, :]
    fe_vals = (
        prep.P(X20, Y20) * block_series(X20, Y20)
        + prep.gen_x(X20, Y20) * h_series(gx20)[:, None]
        + prep.gen_y(X20, Y20) * v_series(gy20)[None, :]
        + prep.gen_0(X20, Y20) * pi00
    )
    fe_residual = float(np.max(np.abs(fe_vals)))

    diagnostics = SolveDiagnostics(
        index_winding=index_winding,
        transition_winding=rung.bc.transition_winding(),
        cleared_winding=rung.cleared_winding,
        factor_count=len(prep.factors),
        samples=rung.n,
        basis_size=rung.basis_size,
        rank=rung.rank,
        sv_ratio=rung.sv_ratio,
        boundary_residual=rung.boundary_residual,
        condition_correction=rung.condition_correction,
        refinement_delta=refinement_delta,
        mass_defect=mass_defect,
        window_mass=window_mass,
        fe_residual=fe_residual,
        radius_agreement=radius_agreement,
        back_substitution_spread=spread_cell[0],
    )
    report = {
        "grid_points": 400,
        "grid_radius": 0.45,
        "max_residual": fe_residual,
        "kernel_scale": prep.kernel_scale,
        "relative_residual": fe_residual / prep.kernel_scale,
        "boundary_residual": rung.boundary_residual,
        "mass_defect": mass_defect,
        "window_mass": window_mass,
        "radius_agreement": radius_agreement,
        "refinement_delta": refinement_delta,
    }
    return SolutionBundle(
        model=prep.fe.model,
        pi00=pi00,
        axis_x=axis_x,
        axis_y=axis_y,
        block=block,
        residual_report=report,
        diagnostics=diagnostics,
        condition=rung.bc,
        disk_map=prep.disk_map,
        _prep=prep,
        _horizontal=horizontal,
        _vertical=vertical,
    )


def _solve_prepared(prep: _Prepared, samples: int) -> SolutionBundle:
    bc_index = derive_boundary_condition(prep.fe, prep.trace)
    index = bc_index.index_winding()

    # sample-doubling ladder: successive normalized axis evaluations at 0.3
    # must agree to 1e-9
    probe_point = 0.3
    rungs = []
    values = []
    n = samples
    for attempt in range(3):
        rung = _collocate(prep, n)
        horizontal, vertical, spread = _axis_evaluators(prep, rung)
        _, _, _, total = _mass_pieces(prep, horizontal, vertical, 0.04, 32)
        value = float(np.real(horizontal(probe_point)[0]) / total)
        rungs.append((rung, horizontal, vertical, spread))
        values.append(value)
        if attempt >= 1 and abs(values[-1] - values[-2]) <= 1e-9:
            break
        n *= 2
    else:
        raise NumericalError(
            "stationary-solve",
            "contour refinement did not stabilize: successive axis "
            f"evaluations at {probe_point} differ by "
            f"{abs(values[-1] - values[-2]):.3e} (target 1e-9)",
        )
    refinement_delta = abs(values[-1] - values[-2])
    rung, horizontal, vertical, spread = rungs[-1]
    return _extract_bundle(
        prep, rung, horizontal, vertical, spread, refinement_delta, index
    )


# ---------------------------------------------------------------------------
# Public solvers.

_BUNDLE_CACHE: dict = {}


def _fingerprint(fe: FunctionalEquation) -> str:
    return json.dumps(model_to_dict(fe.model), sort_keys=True)


def _solve_unified(
    fe: FunctionalEquation,
    samples: int,
    trace: CurveTrace | None = None,
    glue: DiskMap | None = None,
) -> SolutionBundle:
    key = (
        _fingerprint(fe),
        samples,
        None if trace is None else (trace.size, repr(trace.cut)),
        None if glue is None else id(glue),
    )
    if key in _BUNDLE_CACHE:
        return _BUNDLE_CACHE[key]
    prep = _prepare(fe, samples=samples, trace=trace, glue=glue)
    bundle = _solve_prepared(prep, samples)
    _BUNDLE_CACHE[key] = bundle
    return bundle


def solve_small_steps(fe: FunctionalEquation, samples: int = 512) -> SolutionBundle:
    """Stationary law via the scalar boundary-value pipeline.

    Full chain: interior-cut selection, loop tracing, conformal gluing,
    transplanted boundary relation, cleared collocation, normalization and
    coefficient extraction.  Requires the solvability index of the scalar
    relation to vanish; models whose relation carries a nonzero index need
    the clearing-factor modification provided by :func:`solve_lukasiewicz`.
    """
    bundle = _solve_unified(fe, samples)
    index = bundle.diagnostics.index_winding
    if round(index) != 0:
        raise NumericalError(
            "stationary-solve",
            f"{NONZERO_INDEX_MESSAGE} (computed index {int(round(index))})",
        )
    return bundle


def solve_lukasiewicz(
    fe: FunctionalEquation,
    bc: BoundaryCondition,
    glue: DiskMap,
    samples: int = 512,
) -> SolutionBundle:
    """Stationary law for unit-negative walks from supplied boundary data.

    ``bc`` must be the scalar condition derived on the traced loop and
    ``glue`` the conformal map of the loop interior onto the unit disk.
    The solve runs the same cleared collocation as the automatic pipeline
    but keeps the caller's geometry; the relation may carry a nonzero
    index (big positive jumps), which the clearing factors absorb.
    """
    _require_unit_negative(fe)
    if bc.transition is None:
        raise NumericalError(
            "stationary-solve",
            "the supplied boundary condition is part of a vector system; "
            "the scalar solver needs the normalized form",
        )
    return _solve_unified(fe, samples, trace=bc.trace, glue=glue)
