"""Step-set models for reflected random walks in the quarter plane.

A model partitions the quadrant into *homogeneity classes* — one interior
class, a band of horizontal strips along the x-axis, a band of vertical
strips along the y-axis, and finitely many isolated points near the origin —
and attaches a jump distribution to each class.  The partition is driven by
six bounds:

* ``i_minus`` / ``j_minus``: maximal negative jump amplitudes in the interior,
* ``i_zero`` / ``j_zero``: maximal negative amplitudes on the two axes,
* ``i_plus`` / ``j_plus``: maximal positive amplitudes in the interior.

The interior class covers ``i >= i_minus, j >= j_minus``.  Horizontal strip
``l`` (for ``1 <= l < j_minus``) is the row ``{(i, l): i >= i_minus}``; strip
``0`` is the axis row ``{(i, 0): i >= i_zero}``.  Vertical strips mirror this
with columns.  Whatever is left over is a finite set of isolated points, each
carrying its own distribution.  The classes tile the quadrant exactly; the
validator enforces the tiling, per-class stochasticity, and that no jump can
exit the quadrant from any state of its class.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ModelError
from .kernel import BivariatePolynomial
from .tolerances import DEFAULTS

PROB_SUM_TOL = DEFAULTS["prob_sum"]


# ---------------------------------------------------------------------------
# core value types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class JumpBounds:
    """Jump amplitude bounds; see the module docstring for their meaning."""

    i_minus: int
    i_plus: int
    j_minus: int
    j_plus: int
    i_zero: int
    j_zero: int

    def __post_init__(self):
        for name in ("i_minus", "i_plus", "j_minus", "j_plus", "i_zero", "j_zero"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                raise ValueError(f"bound {name} must be an integer >= 1, got {value!r}")
        if self.i_zero < self.i_minus:
            raise ValueError("i_zero must be >= i_minus")
        if self.j_zero < self.j_minus:
            raise ValueError("j_zero must be >= j_minus")


@dataclass(frozen=True)
class StepDistribution:
    """A finite jump distribution: sorted tuple of ``(di, dj, p)`` triples."""

    jumps: tuple[tuple[int, int, float], ...]

    @classmethod
    def from_mapping(cls, mapping) -> "StepDistribution":
        items = mapping.items() if hasattr(mapping, "items") else mapping
        triples = []
        for entry in items:
            if len(entry) == 2 and isinstance(entry[0], tuple):
                (di, dj), p = entry
            else:
                di, dj, p = entry
            triples.append((int(di), int(dj), float(p)))
        triples.sort(key=lambda t: (t[0], t[1]))
        seen = set()
        for di, dj, _ in triples:
            if (di, dj) in seen:
                raise ValueError(f"duplicate jump ({di},{dj})")
            seen.add((di, dj))
        return cls(tuple(triples))

    def as_dict(self) -> dict[tuple[int, int], float]:
        return {(di, dj): p for di, dj, p in self.jumps}

    @property
    def total(self) -> float:
        return float(sum(p for _, _, p in self.jumps))

    def min_dx(self) -> int:
        return min((di for di, _, _ in self.jumps), default=0)

    def min_dy(self) -> int:
        return min((dj for _, dj, _ in self.jumps), default=0)

    def max_dx(self) -> int:
        return max((di for di, _, _ in self.jumps), default=0)

    def max_dy(self) -> int:
        return max((dj for _, dj, _ in self.jumps), default=0)

    def drift(self) -> tuple[float, float]:
        return (
            float(sum(di * p for di, _, p in self.jumps)),
            float(sum(dj * p for _, dj, p in self.jumps)),
        )


@dataclass(frozen=True)
class HomogeneityClass:
    """Identifier of one cell of the quadrant partition.

    ``kind`` is one of ``"interior"``, ``"h_strip"`` (index = row),
    ``"v_strip"`` (index = column) or ``"point"`` (index = the point).
    """

    kind: str
    index: tuple[int, ...] = ()

    def __str__(self):
        if self.kind == "interior":
            return "interior"
        if self.kind == "h_strip":
            return f"h_strip[{self.index[0]}]"
        if self.kind == "v_strip":
            return f"v_strip[{self.index[0]}]"
        return f"point{self.index}"


INTERIOR = HomogeneityClass("interior")


@dataclass(frozen=True)
class WalkModel:
    """A complete step-set model: bounds plus one distribution per class."""

    bounds: JumpBounds
    interior: StepDistribution
    strips_h: tuple[StepDistribution, ...]   # index l = 0 .. j_minus-1
    strips_v: tuple[StepDistribution, ...]   # index k = 0 .. i_minus-1
    isolated: tuple[tuple[tuple[int, int], StepDistribution], ...]

    def isolated_map(self) -> dict[tuple[int, int], StepDistribution]:
        return {pt: dist for pt, dist in self.isolated}

    def distribution(self, cls: HomogeneityClass) -> StepDistribution:
        if cls.kind == "interior":
            return self.interior
        if cls.kind == "h_strip":
            return self.strips_h[cls.index[0]]
        if cls.kind == "v_strip":
            return self.strips_v[cls.index[0]]
        if cls.kind == "point":
            return self.isolated_map()[cls.index]
        raise KeyError(cls)

    def classes(self) -> list[HomogeneityClass]:
        out = [INTERIOR]
        out += [HomogeneityClass("h_strip", (l,)) for l in range(len(self.strips_h))]
        out += [HomogeneityClass("v_strip", (k,)) for k in range(len(self.strips_v))]
        out += [HomogeneityClass("point", pt) for pt, _ in self.isolated]
        return out


# ---------------------------------------------------------------------------
# partition logic
# ---------------------------------------------------------------------------

def isolated_points(bounds: JumpBounds) -> list[tuple[int, int]]:
    """The finite set of states not covered by interior or strip classes."""
    pts = []
    for l in range(bounds.j_minus):
        threshold = bounds.i_zero if l == 0 else bounds.i_minus
        pts.extend((i, l) for i in range(threshold))
    # column 0 between the vertical-strip start and the axis-class start
    pts.extend((0, j) for j in range(bounds.j_minus, bounds.j_zero))
    pts.sort()
    return pts


def classify_state(model_or_bounds, i: int, j: int) -> HomogeneityClass:
    """Map a state to the unique homogeneity class containing it."""
    bounds = (
        model_or_bounds.bounds
        if isinstance(model_or_bounds, WalkModel)
        else model_or_bounds
    )
    if i < 0 or j < 0:
        raise ValueError(f"state ({i},{j}) lies outside the quadrant")
    if i >= bounds.i_minus and j >= bounds.j_minus:
        return INTERIOR
    if j < bounds.j_minus:
        threshold = bounds.i_zero if j == 0 else bounds.i_minus
        if i >= threshold:
            return HomogeneityClass("h_strip", (j,))
        return HomogeneityClass("point", (i, j))
    # here j >= j_minus and i < i_minus
    threshold = bounds.j_zero if i == 0 else bounds.j_minus
    if j >= threshold:
        return HomogeneityClass("v_strip", (i,))
    return HomogeneityClass("point", (i, j))


def _class_min_state(bounds: JumpBounds, cls: HomogeneityClass) -> tuple[int, int]:
    """Coordinate-wise minimal state of a class (used for exit checks)."""
    if cls.kind == "interior":
        return bounds.i_minus, bounds.j_minus
    if cls.kind == "h_strip":
        l = cls.index[0]
        return (bounds.i_zero if l == 0 else bounds.i_minus), l
    if cls.kind == "v_strip":
        k = cls.index[0]
        return k, (bounds.j_zero if k == 0 else bounds.j_minus)
    return cls.index


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

@dataclass
class ValidationReport:
    errors: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def raise_if_failed(self):
        if self.errors:
            raise ModelError(
                f"model validation failed with {len(self.errors)} error(s)",
                details=self.errors,
            )


def _check_distribution(report, label, dist, min_state, bounds, interior=False):
    if not dist.jumps:
        report.errors.append(f"{label}: empty jump distribution")
        return
    total = dist.total
    if abs(total - 1.0) > PROB_SUM_TOL:
        report.errors.append(
            f"{label}: probabilities sum to {total!r}, not 1 (defect {total - 1.0:.3e})"
        )
    i0, j0 = min_state
    for di, dj, p in dist.jumps:
        if p < 0.0 or p > 1.0:
            report.errors.append(f"{label}: jump ({di},{dj}) has probability {p!r}")
        if i0 + di < 0 or j0 + dj < 0:
            report.errors.append(
                f"{label}: jump ({di},{dj}) exits the quadrant from state ({i0},{j0})"
            )
        if interior:
            if di < -bounds.i_minus or di > bounds.i_plus:
                report.errors.append(
                    f"{label}: interior jump dx={di} outside [-{bounds.i_minus},{bounds.i_plus}]"
                )
            if dj < -bounds.j_minus or dj > bounds.j_plus:
                report.errors.append(
                    f"{label}: interior jump dy={dj} outside [-{bounds.j_minus},{bounds.j_plus}]"
                )


def validate_model(model: WalkModel) -> ValidationReport:
    """Structural validation: class layout, stochasticity, no quadrant exits.

    Ergodicity is *not* decided here — a model whose interior drift cannot be
    negative only triggers a warning, because shape validity and positive
    recurrence are separate questions.
    """
    report = ValidationReport()
    b = model.bounds

    if len(model.strips_h) != b.j_minus:
        report.errors.append(
            f"expected {b.j_minus} horizontal strip distribution(s), got {len(model.strips_h)}"
        )
    if len(model.strips_v) != b.i_minus:
        report.errors.append(
            f"expected {b.i_minus} vertical strip distribution(s), got {len(model.strips_v)}"
        )
    expected_pts = isolated_points(b)
    got_pts = [pt for pt, _ in model.isolated]
    if sorted(got_pts) != expected_pts:
        missing = sorted(set(expected_pts) - set(got_pts))
        extra = sorted(set(got_pts) - set(expected_pts))
        if missing:
            report.errors.append(f"isolated points missing distributions: {missing}")
        if extra:
            report.errors.append(f"distributions for non-isolated points: {extra}")
    if len(set(got_pts)) != len(got_pts):
        report.errors.append("duplicate isolated-point distributions")

    _check_distribution(
        report, "interior", model.interior, (b.i_minus, b.j_minus), b, interior=True
    )
    for l, dist in enumerate(model.strips_h):
        cls = HomogeneityClass("h_strip", (l,))
        _check_distribution(report, str(cls), dist, _class_min_state(b, cls), b)
    for k, dist in enumerate(model.strips_v):
        cls = HomogeneityClass("v_strip", (k,))
        _check_distribution(report, str(cls), dist, _class_min_state(b, cls), b)
    for pt, dist in model.isolated:
        cls = HomogeneityClass("point", pt)
        _check_distribution(report, str(cls), dist, pt, b)

    dx, dy = model.interior.drift()
    if model.interior.min_dx() >= 0 or model.interior.min_dy() >= 0:
        report.warnings.append(
            "interior cannot jump towards one of the axes; "
            "no negative drift possible, ergodicity doubtful"
        )
    elif dx >= 0 or dy >= 0:
        report.warnings.append(
            f"interior drift ({dx:+.4f},{dy:+.4f}) is not negative in both "
            "coordinates; ergodicity doubtful"
        )
    return report


# ---------------------------------------------------------------------------
# functional equation assembly
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class UnknownFunction:
    """One unknown one-variable generating function of the stationary law.

    ``axis`` is ``"x"`` for a horizontal strip (series in x, row ``index``) or
    ``"y"`` for a vertical strip (series in y, column ``index``).
    ``start`` is the first exponent with a (possibly) nonzero coefficient.
    """

    axis: str
    index: int
    start: int

    def __str__(self):
        var = self.axis
        return f"{'h' if var == 'x' else 'v'}{self.index}({var})"


@dataclass(frozen=True)
class FunctionalEquation:
    """The stationary functional equation in pre-multiplied polynomial form.

    The raw balance identity reads ``sum_c R_c(x,y) * pi_c(x,y) = 0`` where
    ``R_c = -1 + sum p x**di y**dj`` ranges over homogeneity classes and
    ``pi_c`` collects the stationary series of class ``c``.  All generators
    here are stored multiplied by ``x**sx * y**sy`` (``monomial_shift``) with
    ``sx = max(i_minus, i_zero)``, ``sy = max(j_minus, j_zero)``, which clears
    every negative exponent at once so each stored object is an honest
    polynomial.  ``interior_gen`` with the default unit shifts is exactly the
    kernel polynomial.
    """

    model: WalkModel
    bounds: JumpBounds
    monomial_shift: tuple[int, int]
    interior_gen: BivariatePolynomial
    class_gens: dict[HomogeneityClass, BivariatePolynomial]
    unknown_functions: tuple[UnknownFunction, ...]
    unknown_scalars: tuple[tuple[int, int], ...]

    def laurent_gen(self, cls: HomogeneityClass):
        """Evaluator for the raw ``R_c(x,y) = -1 + sum p x**di y**dj``."""
        jumps = self.model.distribution(cls).jumps

        def ev(x, y):
            x = np.asarray(x, dtype=complex)
            y = np.asarray(y, dtype=complex)
            acc = -np.ones(np.broadcast(x, y).shape, dtype=complex)
            for di, dj, p in jumps:
                acc = acc + p * x**di * y**dj
            return acc if acc.shape else complex(acc)

        return ev

    def kernel(self) -> BivariatePolynomial:
        b = self.bounds
        if self.monomial_shift == (b.i_minus, b.j_minus):
            return self.interior_gen
        gen = _premultiplied_gen(self.model.interior, b.i_minus, b.j_minus)
        return gen


def _premultiplied_gen(dist: StepDistribution, sx: int, sy: int) -> BivariatePolynomial:
    """Build ``x**sx y**sy * (-1 + sum p x**di y**dj)`` as a dense polynomial."""
    if dist.min_dx() + sx < 0 or dist.min_dy() + sy < 0:
        raise ModelError(
            f"shift ({sx},{sy}) does not clear negative exponents "
            f"({dist.min_dx()},{dist.min_dy()})"
        )
    nx = sx + max(dist.max_dx(), 0) + 1
    ny = sy + max(dist.max_dy(), 0) + 1
    c = np.zeros((nx, ny))
    c[sx, sy] = -1.0
    for di, dj, p in dist.jumps:
        c[sx + di, sy + dj] += p
    return BivariatePolynomial(c)


def assemble_functional_equation(model: WalkModel) -> FunctionalEquation:
    """Assemble the pre-multiplied functional equation for a valid model."""
    report = validate_model(model)
    report.raise_if_failed()
    b = model.bounds
    sx = max(b.i_minus, b.i_zero)
    sy = max(b.j_minus, b.j_zero)

    class_gens: dict[HomogeneityClass, BivariatePolynomial] = {}
    for cls in model.classes():
        class_gens[cls] = _premultiplied_gen(model.distribution(cls), sx, sy)

    unknowns = tuple(
        [UnknownFunction("x", l, b.i_zero if l == 0 else b.i_minus)
         for l in range(b.j_minus)]
        + [UnknownFunction("y", k, b.j_zero if k == 0 else b.j_minus)
           for k in range(b.i_minus)]
    )
    interior_gen = (
        class_gens[INTERIOR]
        if (sx, sy) == (b.i_minus, b.j_minus)
        else _premultiplied_gen(model.interior, b.i_minus, b.j_minus)
    )
    return FunctionalEquation(
        model=model,
        bounds=b,
        monomial_shift=(sx, sy),
        interior_gen=interior_gen,
        class_gens=class_gens,
        unknown_functions=unknowns,
        unknown_scalars=tuple(pt for pt, _ in model.isolated),
    )


# ---------------------------------------------------------------------------
# JSON serialisation
# ---------------------------------------------------------------------------

def _jumps_to_json(dist: StepDistribution):
    return [[di, dj, p] for di, dj, p in dist.jumps]


def _jumps_from_json(raw) -> StepDistribution:
    return StepDistribution.from_mapping([(int(a), int(b), float(p)) for a, b, p in raw])


def model_to_dict(model: WalkModel) -> dict:
    return {
        "bounds": {
            "i_minus": model.bounds.i_minus,
            "i_plus": model.bounds.i_plus,
            "j_minus": model.bounds.j_minus,
            "j_plus": model.bounds.j_plus,
            "i_zero": model.bounds.i_zero,
            "j_zero": model.bounds.j_zero,
        },
        "interior": _jumps_to_json(model.interior),
        "strips_h": [_jumps_to_json(d) for d in model.strips_h],
        "strips_v": [_jumps_to_json(d) for d in model.strips_v],
        "isolated": [
            {"k": pt[0], "l": pt[1], "jumps": _jumps_to_json(dist)}
            for pt, dist in model.isolated
        ],
    }


def model_from_dict(raw: dict) -> WalkModel:
    try:
        braw = raw["bounds"]
        bounds = JumpBounds(
            i_minus=int(braw["i_minus"]),
            i_plus=int(braw["i_plus"]),
            j_minus=int(braw["j_minus"]),
            j_plus=int(braw["j_plus"]),
            i_zero=int(braw["i_zero"]),
            j_zero=int(braw["j_zero"]),
        )
        interior = _jumps_from_json(raw["interior"])
        strips_h = tuple(_jumps_from_json(d) for d in raw["strips_h"])
        strips_v = tuple(_jumps_from_json(d) for d in raw["strips_v"])
        isolated = tuple(
            sorted(
                ((int(e["k"]), int(e["l"])), _jumps_from_json(e["jumps"]))
                for e in raw["isolated"]
            )
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelError(f"malformed model description: {exc}") from exc
    return WalkModel(
        bounds=bounds,
        interior=interior,
        strips_h=strips_h,
        strips_v=strips_v,
        isolated=isolated,
    )


def load_model(path) -> WalkModel:
    text = Path(path).read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelError(f"model file {path} is not valid JSON: {exc}") from exc
    return model_from_dict(raw)


def save_model(model: WalkModel, path):
    Path(path).write_text(json.dumps(model_to_dict(model), indent=2) + "\n")
