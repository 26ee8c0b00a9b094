"""Brute-force oracles used to cross-check every analytic stage.

Three fully independent routes:

* ``truncated_stationary`` builds the transition matrix of the walk restricted
  to a finite box (jumps that would leave the box are clamped onto its edge),
  and solves the stationary balance equations with a sparse LU factorization.
  A tail-mass guard certifies that the truncation bias is negligible.
* ``monte_carlo_occupancy`` simulates many independent walkers with a
  counter-based generator and reports empirical state frequencies.
* ``sweep_branch_points`` locates branch points without any resultant: a grid
  scan for near-collisions of fiber roots, refined by a two-dimensional
  Newton iteration on the system ``P = 0, dP/dfiber = 0``.

None of these share code with the analytic pipeline, which is what makes the
acceptance comparisons meaningful.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import splu

from .errors import NumericalError
from .kernel import BivariatePolynomial
from .model import WalkModel, classify_state
from .tolerances import DEFAULTS

TAIL_TOL = DEFAULTS["oracle_tail"]


@dataclass(frozen=True)
class OracleResult:
    """Stationary distribution of the truncated chain."""

    pi: np.ndarray  # pi[i, j], shape (truncation, truncation)
    truncation: int
    tail_mass: float

    def axis_x(self) -> np.ndarray:
        return self.pi[:, 0]

    def axis_y(self) -> np.ndarray:
        return self.pi[0, :]

    def block(self, size: int) -> np.ndarray:
        return self.pi[:size, :size]


def _class_state_grids(model: WalkModel, n: int):
    """Yield ``(distribution, i_indices, j_indices)`` covering the box once."""
    b = model.bounds
    # interior rectangle
    ii, jj = np.meshgrid(
        np.arange(b.i_minus, n), np.arange(b.j_minus, n), indexing="ij"
    )
    yield model.interior, ii.ravel(), jj.ravel()
    # horizontal strips: full rows below the interior, minus isolated heads
    for l, dist in enumerate(model.strips_h):
        start = b.i_zero if l == 0 else b.i_minus
        if start < n:
            i = np.arange(start, n)
            yield dist, i, np.full_like(i, l)
    # vertical strips
    for k, dist in enumerate(model.strips_v):
        start = b.j_zero if k == 0 else b.j_minus
        if start < n:
            j = np.arange(start, n)
            yield dist, np.full_like(j, k), j
    # isolated points
    for (k, l), dist in model.isolated:
        yield dist, np.array([k]), np.array([l])


def transition_matrix(model: WalkModel, truncation: int) -> sp.csr_matrix:
    """Row-stochastic transition matrix on the clamped box ``[0, n) x [0, n)``."""
    n = truncation
    rows, cols, vals = [], [], []
    for dist, ii, jj in _class_state_grids(model, n):
        src = ii * n + jj
        for di, dj, p in dist.jumps:
            ti = np.clip(ii + di, 0, n - 1)
            tj = np.clip(jj + dj, 0, n - 1)
            rows.append(src)
            cols.append(ti * n + tj)
            vals.append(np.full(src.shape, p))
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    P = sp.coo_matrix((vals, (rows, cols)), shape=(n * n, n * n)).tocsr()
    defect = np.abs(P.sum(axis=1).A1 - 1.0).max()
    if defect > 1e-9:
        raise NumericalError(
            "oracle", f"transition rows do not sum to one (defect {defect:.3e})"
        )
    return P


def truncated_stationary(model: WalkModel, truncation: int = 400) -> OracleResult:
    """Stationary distribution of the clamped finite chain via sparse LU.

    The singular balance system ``(P^T - I) pi = 0`` is made definite by
    replacing the equation of state (0, 0) with the normalization
    ``sum pi = 1``.  Fails loudly when the chain is not irreducible on the box
    or when the mass on the outer 10% frame exceeds the tail tolerance.
    """
    n = truncation
    P = transition_matrix(model, n)
    ncomp, _ = connected_components(P, directed=True, connection="strong")
    if ncomp != 1:
        raise NumericalError(
            "oracle",
            f"truncated chain is not irreducible ({ncomp} strongly connected "
            "components)",
        )
    A = (P.T - sp.identity(n * n, format="csr")).tocoo()
    keep = A.row != 0
    rows = np.concatenate([A.row[keep], np.zeros(n * n, dtype=A.row.dtype)])
    cols = np.concatenate([A.col[keep], np.arange(n * n)])
    vals = np.concatenate([A.data[keep], np.ones(n * n)])
    M = sp.coo_matrix((vals, (rows, cols)), shape=(n * n, n * n)).tocsc()
    rhs = np.zeros(n * n)
    rhs[0] = 1.0
    lu = splu(M)
    pi = lu.solve(rhs)
    if np.min(pi) < -1e-12:
        raise NumericalError(
            "oracle", f"stationary solve produced negative mass {np.min(pi):.3e}"
        )
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()
    pi = pi.reshape(n, n)
    frame = int(np.ceil(0.9 * n))
    mask = np.zeros((n, n), dtype=bool)
    mask[frame:, :] = True
    mask[:, frame:] = True
    tail = float(pi[mask].sum())
    if tail > TAIL_TOL:
        raise NumericalError(
            "oracle",
            f"tail mass {tail:.3e} on the outer frame exceeds {TAIL_TOL:.1e}; "
            "increase the truncation",
        )
    return OracleResult(pi=pi, truncation=n, tail_mass=tail)


@dataclass(frozen=True)
class MonteCarloResult:
    counts: np.ndarray  # occupancy counts on a window
    window: int
    total_steps: int

    @property
    def pi(self) -> np.ndarray:
        return self.counts / self.counts.sum()


def monte_carlo_occupancy(
    model: WalkModel,
    n_samples: int = 1 << 20,
    walkers: int = 1 << 12,
    burn_in: int = 2000,
    window: int = 64,
    seed: int = 0,
) -> MonteCarloResult:
    """Empirical occupancy from independent walkers, Philox-seeded.

    ``n_samples`` counts recorded (walker, step) pairs after burn-in.  Only
    visits inside the ``window`` x ``window`` corner box are tallied; with
    geometric decay that is where essentially all the mass lives.
    """
    rng = np.random.Generator(np.random.Philox(key=seed))
    steps = max(1, int(np.ceil(n_samples / walkers)))
    # per-class jump tables
    classes = model.classes()
    tables = []
    for cls in classes:
        jumps = model.distribution(cls).jumps
        dx = np.array([d[0] for d in jumps])
        dy = np.array([d[1] for d in jumps])
        cum = np.cumsum([d[2] for d in jumps])
        cum[-1] = 1.0
        tables.append((dx, dy, cum))
    class_index = {cls: t for cls, t in zip(classes, tables)}

    b = model.bounds
    lookup_n = max(b.i_zero, b.j_zero) + 2

    def table_for(i, j):
        return class_index[classify_state(model, int(i), int(j))]

    # precompute the class table on a small lookup grid; beyond it the state
    # is interior in the corresponding direction
    lut = np.empty((lookup_n, lookup_n), dtype=object)
    for i in range(lookup_n):
        for j in range(lookup_n):
            lut[i, j] = table_for(i, j)

    ii = np.zeros(walkers, dtype=np.int64)
    jj = np.zeros(walkers, dtype=np.int64)
    counts = np.zeros((window, window), dtype=np.int64)
    recorded = 0
    for step in range(burn_in + steps):
        ci = np.minimum(ii, lookup_n - 1)
        cj = np.minimum(jj, lookup_n - 1)
        u = rng.random(walkers)
        # walk through the distinct tables present this step
        keys = ci * lookup_n + cj
        for key in np.unique(keys):
            mask = keys == key
            dx, dy, cum = lut[key // lookup_n, key % lookup_n]
            idx = np.searchsorted(cum, u[mask], side="left")
            idx = np.minimum(idx, len(cum) - 1)
            ii[mask] += dx[idx]
            jj[mask] += dy[idx]
        if np.min(ii) < 0 or np.min(jj) < 0:
            raise NumericalError("oracle", "simulation stepped outside the quadrant")
        if step >= burn_in:
            sel = (ii < window) & (jj < window)
            np.add.at(counts, (ii[sel], jj[sel]), 1)
            recorded += walkers
    return MonteCarloResult(counts=counts, window=window, total_steps=recorded)


def _newton_double_root(P: BivariatePolynomial, x, y, steps: int = 60):
    """Newton on ``P = 0, dP/dx = 0``; returns the solution or ``None``."""
    dP = P.partial("x")
    Px, Py = dP, P.partial("y")
    dPx, dPy = dP.partial("x"), dP.partial("y")
    for _ in range(steps):
        F = np.array([P(x, y), dP(x, y)])
        J = np.array([[Px(x, y), Py(x, y)], [dPx(x, y), dPy(x, y)]])
        try:
            delta = np.linalg.solve(J, F)
        except np.linalg.LinAlgError:
            return None
        x, y = x - delta[0], y - delta[1]
        if np.max(np.abs(F)) < 1e-13 * max(1.0, P.scale()) and np.max(
            np.abs(delta)
        ) < 1e-11 * (1.0 + abs(x) + abs(y)):
            return x, y
    return None


def sweep_branch_points(
    P: BivariatePolynomial,
    plane: str,
    radius: float = 1.2,
    grid: int = 61,
    gap_threshold: float = 1.0,
) -> list[complex]:
    """Branch points inside ``|z| <= radius`` found without any resultant.

    Scans a square grid of base points and measures the minimal spherical
    (chordal) distance between fiber roots, so that pairs colliding at
    infinity are detected as well.  Every near-collision seeds a Newton
    iteration on ``P = 0, dP/dfiber = 0`` in the two complex unknowns —
    run in the reciprocal fiber chart when the colliding pair is large.
    Returns deduplicated converged base locations, an independent check of
    the discriminant route.

    The default threshold seeds from every grid node: convergence of the
    Newton polish is what actually certifies a branch point, the gap value
    only prunes work when the caller wants a faster scan.
    """
    fiber_var = "x" if plane == "y" else "y"
    # orient so the fiber variable is literally 'x'
    W = P if fiber_var == "x" else P.swapped()
    Wrev = W.reversed_in("x")
    degree = W.deg_x

    seeds = []
    axis = np.linspace(-radius, radius, grid)
    for br in axis:
        for bi in axis:
            b = complex(br, bi)
            roots = W.fiber("y", b).roots()
            if len(roots) < degree:
                roots = np.concatenate(
                    [roots, np.full(degree - len(roots), 1e12 + 0j)]
                )
            if len(roots) < 2:
                continue
            w = 1.0 / np.sqrt(1.0 + np.abs(roots) ** 2)
            gap = np.abs(roots[:, None] - roots[None, :]) * (w[:, None] * w[None, :])
            np.fill_diagonal(gap, np.inf)
            k = np.argmin(gap)
            i, j = divmod(k, len(roots))
            if gap[i, j] < gap_threshold:
                big = min(abs(roots[i]), abs(roots[j])) > 10.0
                mean = (
                    0.5 * (1.0 / roots[i] + 1.0 / roots[j])
                    if big
                    else 0.5 * (roots[i] + roots[j])
                )
                seeds.append((b, mean, big))

    found = []
    for b0, f0, reciprocal in seeds:
        target = Wrev if reciprocal else W
        sol = _newton_double_root(target, f0, b0)
        if sol is None:
            continue
        base = sol[1]
        if abs(base) <= radius + 1e-6:
            found.append(complex(base))
    out = []
    for z in found:
        if all(abs(z - w) > 1e-6 * (1.0 + abs(z)) for w in out):
            out.append(z)
    out.sort(key=lambda z: (round(z.real, 9), round(z.imag, 9)))
    return out
