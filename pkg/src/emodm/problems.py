"""Scalable multi-objective benchmark problems: ZDT, DTLZ, and LSMOP.

All problems are box-constrained minimization problems with known analytic
Pareto fronts, taken from their origin publications:

    ZDT:   Zitzler, Deb & Thiele (2000), Evolutionary Computation 8(2).
    DTLZ:  Deb, Thiele, Laumanns & Zitzler (2002/2005), scalable test problems.
    LSMOP: Cheng, Jin, Olhofer & Sendhoff (2017), IEEE Trans. Cybernetics,
           large-scale test problems with chaos-based variable grouping.

ZDT5 is binary-coded in its original definition and is not supported; the
real-valued members ZDT1-4 and ZDT6 are. LSMOP uses the published default of
5 subcomponents per variable group, which puts a lower limit on the number
of decision variables (every group must be non-empty).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .metrics import FeLedger, nondominated_mask

SPACE_RAW = "raw"
SPACE_NORMALIZED = "normalized"

SUITES = ("ZDT", "DTLZ", "LSMOP")

_ZDT_INDICES = (1, 2, 3, 4, 6)
_LSMOP_SUBCOMPONENTS = 5  # published default n_k


@dataclass
class Population:
    """N decision vectors, optionally with their N objective vectors.

    ``step`` is a generation index or diffusion step, documented per use;
    ``space_tag`` records the coordinate frame the decisions live in.
    """

    step: int
    decisions: np.ndarray
    objectives: np.ndarray | None = None
    space_tag: str = SPACE_RAW

    def __post_init__(self) -> None:
        self.decisions = np.asarray(self.decisions, dtype=float)
        if self.decisions.ndim != 2:
            raise ValueError("decisions must be an N x d matrix")
        if self.objectives is not None:
            self.objectives = np.asarray(self.objectives, dtype=float)
            if self.objectives.ndim != 2 or self.objectives.shape[0] != self.decisions.shape[0]:
                raise ValueError("objectives must be an N x m matrix matching decisions rows")

    @property
    def n(self) -> int:
        return self.decisions.shape[0]

    @property
    def d(self) -> int:
        return self.decisions.shape[1]


@dataclass(frozen=True)
class MopInstance:
    """One benchmark problem: evaluator, box bounds, and front sampler."""

    id: str
    suite: str
    index: int
    m: int
    d: int
    lower: np.ndarray
    upper: np.ndarray
    _batch_evaluator: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    _front_sampler: Callable[[int], np.ndarray] = field(repr=False)

    def evaluator(self, x: np.ndarray) -> np.ndarray:
        """Evaluate a single length-d decision vector (pure, deterministic)."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.d,):
            raise ValueError(f"expected a length-{self.d} vector, got shape {x.shape}")
        return self._batch_evaluator(x[None, :])[0]

    def clamp(self, decisions: np.ndarray) -> np.ndarray:
        return np.clip(decisions, self.lower, self.upper)


# ---------------------------------------------------------------------------
# ZDT suite (m = 2, bounds [0, 1]^d except ZDT4)


def _zdt_batch(index: int, d: int) -> Callable[[np.ndarray], np.ndarray]:
    def ev(x: np.ndarray) -> np.ndarray:
        f1 = x[:, 0].copy()
        tail = x[:, 1:]
        if index == 1:
            g = 1.0 + 9.0 * tail.sum(axis=1) / (d - 1)
            f2 = g * (1.0 - np.sqrt(f1 / g))
        elif index == 2:
            g = 1.0 + 9.0 * tail.sum(axis=1) / (d - 1)
            f2 = g * (1.0 - (f1 / g) ** 2)
        elif index == 3:
            g = 1.0 + 9.0 * tail.sum(axis=1) / (d - 1)
            f2 = g * (1.0 - np.sqrt(f1 / g) - (f1 / g) * np.sin(10.0 * np.pi * f1))
        elif index == 4:
            g = 1.0 + 10.0 * (d - 1) + np.sum(tail**2 - 10.0 * np.cos(4.0 * np.pi * tail), axis=1)
            f2 = g * (1.0 - np.sqrt(f1 / g))
        elif index == 6:
            f1 = 1.0 - np.exp(-4.0 * x[:, 0]) * np.sin(6.0 * np.pi * x[:, 0]) ** 6
            g = 1.0 + 9.0 * (tail.sum(axis=1) / (d - 1)) ** 0.25
            f2 = g * (1.0 - (f1 / g) ** 2)
        else:  # pragma: no cover - guarded by make_problem
            raise ValueError(f"unsupported ZDT index {index}")
        return np.column_stack([f1, f2])

    return ev


def _zdt6_f1_min() -> float:
    # Minimum of f1(x) = 1 - exp(-4x) sin^6(6 pi x) over [0, 1], found on a
    # dense grid with one parabolic refinement (deterministic).
    xs = np.linspace(0.0, 1.0, 200_001)
    f1 = 1.0 - np.exp(-4.0 * xs) * np.sin(6.0 * np.pi * xs) ** 6
    i = int(np.argmin(f1))
    lo, hi = max(i - 1, 0), min(i + 1, xs.size - 1)
    xa, xb, xc = xs[lo], xs[i], xs[hi]
    fa, fb, fc = f1[lo], f1[i], f1[hi]
    denom = (xb - xa) * (fb - fc) - (xb - xc) * (fb - fa)
    if denom != 0.0:
        xv = xb - 0.5 * ((xb - xa) ** 2 * (fb - fc) - (xb - xc) ** 2 * (fb - fa)) / denom
        xv = min(max(xv, xa), xc)
        fv = 1.0 - math.exp(-4.0 * xv) * math.sin(6.0 * math.pi * xv) ** 6
        return float(min(fb, fv))
    return float(fb)


_ZDT6_F1_MIN = _zdt6_f1_min()


def _zdt_front(index: int, n: int) -> np.ndarray:
    if index in (1, 4):
        f1 = np.linspace(0.0, 1.0, n)
        return np.column_stack([f1, 1.0 - np.sqrt(f1)])
    if index == 2:
        f1 = np.linspace(0.0, 1.0, n)
        return np.column_stack([f1, 1.0 - f1**2])
    if index == 3:
        grid = np.linspace(0.0, 1.0, max(10_000, 10 * n))
        f2 = 1.0 - np.sqrt(grid) - grid * np.sin(10.0 * np.pi * grid)
        pts = np.column_stack([grid, f2])
        pts = pts[nondominated_mask(pts)]
        return _subsample_rows(pts, n)
    if index == 6:
        f1 = np.linspace(_ZDT6_F1_MIN, 1.0, n)
        return np.column_stack([f1, 1.0 - f1**2])
    raise ValueError(f"unsupported ZDT index {index}")  # pragma: no cover


# ---------------------------------------------------------------------------
# DTLZ suite (k = d - m + 1 distance variables, bounds [0, 1]^d)


def _dtlz_batch(index: int, m: int, d: int) -> Callable[[np.ndarray], np.ndarray]:
    k = d - m + 1

    def shape_linear(xp: np.ndarray, g: np.ndarray) -> np.ndarray:
        n = xp.shape[0]
        f = np.empty((n, m))
        for i in range(m):
            prod = np.prod(xp[:, : m - 1 - i], axis=1)
            if i > 0:
                prod = prod * (1.0 - xp[:, m - 1 - i])
            f[:, i] = 0.5 * (1.0 + g) * prod
        return f

    def shape_concave(theta: np.ndarray, g: np.ndarray) -> np.ndarray:
        n = theta.shape[0]
        f = np.empty((n, m))
        for i in range(m):
            prod = np.prod(np.cos(theta[:, : m - 1 - i] * np.pi / 2.0), axis=1)
            if i > 0:
                prod = prod * np.sin(theta[:, m - 1 - i] * np.pi / 2.0)
            f[:, i] = (1.0 + g) * prod
        return f

    def ev(x: np.ndarray) -> np.ndarray:
        xp, xm = x[:, : m - 1], x[:, m - 1 :]
        if index in (1, 3):
            g = 100.0 * (k + np.sum((xm - 0.5) ** 2 - np.cos(20.0 * np.pi * (xm - 0.5)), axis=1))
        elif index in (2, 4, 5):
            g = np.sum((xm - 0.5) ** 2, axis=1)
        elif index == 6:
            g = np.sum(xm**0.1, axis=1)
        elif index == 7:
            g = 1.0 + 9.0 * xm.mean(axis=1)
        else:  # pragma: no cover
            raise ValueError(f"unsupported DTLZ index {index}")

        if index == 1:
            return shape_linear(xp, g)
        if index in (2, 3):
            return shape_concave(xp, g)
        if index == 4:
            return shape_concave(xp**100.0, g)
        if index in (5, 6):
            theta = np.empty_like(xp)
            if m >= 2:
                theta[:, 0] = xp[:, 0]
            for i in range(1, m - 1):
                theta[:, i] = (1.0 + 2.0 * g * xp[:, i]) / (2.0 * (1.0 + g))
            return shape_concave(theta, g)
        # DTLZ7: disconnected front
        n = x.shape[0]
        f = np.empty((n, m))
        f[:, : m - 1] = xp
        h = m - np.sum(f[:, : m - 1] / (1.0 + g[:, None]) * (1.0 + np.sin(3.0 * np.pi * f[:, : m - 1])), axis=1)
        f[:, m - 1] = (1.0 + g) * h
        return f

    return ev


def _dtlz_front(index: int, m: int, n: int) -> np.ndarray:
    if index == 1:
        return 0.5 * _simplex_points(m, n)
    if index in (2, 3, 4):
        return _unit_sphere_points(m, n)
    if index in (5, 6):
        return _degenerate_arc_points(m, n)
    return _staircase_front(m, n, scale=2.0)  # DTLZ7


# ---------------------------------------------------------------------------
# LSMOP suite (chaos-based variable grouping, 5 subcomponents per group)


def _lsmop_layout(m: int, d: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-objective subcomponent sizes and cumulative group offsets."""
    c = [3.8 * 0.1 * (1.0 - 0.1)]
    for _ in range(m - 1):
        c.append(3.8 * c[-1] * (1.0 - c[-1]))
    c = np.asarray(c)
    sublen = np.floor(c / c.sum() * (d - m + 1) / _LSMOP_SUBCOMPONENTS).astype(int)
    offsets = np.concatenate([[0], np.cumsum(sublen * _LSMOP_SUBCOMPONENTS)])
    return sublen, offsets


def _g_sphere(b: np.ndarray) -> np.ndarray:
    return np.sum(b**2, axis=1)


def _g_schwefel(b: np.ndarray) -> np.ndarray:
    return np.max(np.abs(b), axis=1)


def _g_rosenbrock(b: np.ndarray) -> np.ndarray:
    if b.shape[1] < 2:
        return np.zeros(b.shape[0])
    return np.sum(100.0 * (b[:, :-1] ** 2 - b[:, 1:]) ** 2 + (b[:, :-1] - 1.0) ** 2, axis=1)


def _g_rastrigin(b: np.ndarray) -> np.ndarray:
    return np.sum(b**2 - 10.0 * np.cos(2.0 * np.pi * b) + 10.0, axis=1)


def _g_griewank(b: np.ndarray) -> np.ndarray:
    idx = np.sqrt(np.arange(1, b.shape[1] + 1))
    return np.sum(b**2, axis=1) / 4000.0 - np.prod(np.cos(b / idx), axis=1) + 1.0


def _g_ackley(b: np.ndarray) -> np.ndarray:
    L = b.shape[1]
    return (
        20.0
        - 20.0 * np.exp(-0.2 * np.sqrt(np.sum(b**2, axis=1) / L))
        - np.exp(np.sum(np.cos(2.0 * np.pi * b), axis=1) / L)
        + np.e
    )


# (odd-group g, even-group g, nonlinear linkage?) per instance; 1-based parity.
_LSMOP_CONFIG = {
    1: (_g_sphere, _g_sphere, False),
    2: (_g_griewank, _g_schwefel, False),
    3: (_g_rastrigin, _g_rosenbrock, False),
    4: (_g_ackley, _g_griewank, False),
    5: (_g_sphere, _g_schwefel, True),
    6: (_g_rosenbrock, _g_schwefel, True),
    7: (_g_ackley, _g_rosenbrock, True),
    8: (_g_griewank, _g_sphere, True),
    9: (_g_sphere, _g_ackley, True),
}


def _lsmop_batch(index: int, m: int, d: int) -> Callable[[np.ndarray], np.ndarray]:
    g_odd, g_even, nonlinear = _LSMOP_CONFIG[index]
    sublen, offsets = _lsmop_layout(m, d)
    nk = _LSMOP_SUBCOMPONENTS
    j = np.arange(m, d + 1, dtype=float)  # 1-based linkage positions m..d
    factor = (1.0 + np.cos(j / d * np.pi / 2.0)) if nonlinear else (1.0 + j / d)

    def group_values(z: np.ndarray) -> np.ndarray:
        n = z.shape[0]
        G = np.zeros((n, m))
        for i in range(m):
            fn = g_odd if (i + 1) % 2 == 1 else g_even
            base = offsets[i] + (m - 1)
            acc = np.zeros(n)
            for sub in range(nk):
                lo = base + sub * sublen[i]
                acc += fn(z[:, lo : lo + sublen[i]])
            G[:, i] = acc / sublen[i] / nk
        return G

    def ev(x: np.ndarray) -> np.ndarray:
        z = x.copy()
        z[:, m - 1 :] = factor * x[:, m - 1 :] - 10.0 * x[:, 0:1]
        G = group_values(z)
        n = x.shape[0]
        xp = x[:, : m - 1]
        f = np.empty((n, m))
        if index <= 4:
            for i in range(m):
                prod = np.prod(xp[:, : m - 1 - i], axis=1)
                if i > 0:
                    prod = prod * (1.0 - xp[:, m - 1 - i])
                f[:, i] = (1.0 + G[:, i]) * prod
        elif index <= 8:
            # Neighbouring-group coupling: objective i also sees group i+1.
            G_next = np.column_stack([G[:, 1:], np.zeros(n)])
            for i in range(m):
                prod = np.prod(np.cos(xp[:, : m - 1 - i] * np.pi / 2.0), axis=1)
                if i > 0:
                    prod = prod * np.sin(xp[:, m - 1 - i] * np.pi / 2.0)
                f[:, i] = (1.0 + G[:, i] + G_next[:, i]) * prod
        else:  # LSMOP9, disconnected front
            g_total = 1.0 + G.sum(axis=1)
            f[:, : m - 1] = xp
            h = m - np.sum(xp / (1.0 + g_total[:, None]) * (1.0 + np.sin(3.0 * np.pi * xp)), axis=1)
            f[:, m - 1] = (1.0 + g_total) * h
        return f

    return ev


def _lsmop_front(index: int, m: int, n: int) -> np.ndarray:
    if index <= 4:
        return _simplex_points(m, n)
    if index <= 8:
        return _unit_sphere_points(m, n)
    return _staircase_front(m, n, scale=2.0)  # LSMOP9


# ---------------------------------------------------------------------------
# Reference-front point generators


def _subsample_rows(points: np.ndarray, n: int) -> np.ndarray:
    if points.shape[0] < n:
        raise ValueError(f"cannot subsample {n} points from {points.shape[0]}")
    idx = np.unique(np.round(np.linspace(0, points.shape[0] - 1, n)).astype(int))
    # np.unique can shrink the set when n is close to the row count; pad from
    # the unused indices deterministically.
    if idx.size < n:
        missing = np.setdiff1d(np.arange(points.shape[0]), idx)[: n - idx.size]
        idx = np.sort(np.concatenate([idx, missing]))
    return points[idx]


def _simplex_points(m: int, n: int) -> np.ndarray:
    """n points on the unit simplex (sum = 1), mutually non-dominated."""
    if m == 2:
        t = np.linspace(0.0, 1.0, n)
        return np.column_stack([t, 1.0 - t])
    # Das-Dennis lattice for m = 3, densified until it holds >= n points.
    h = 1
    while (h + 1) * (h + 2) // 2 < n:
        h += 1
    pts = []
    for i in range(h + 1):
        for jj in range(h + 1 - i):
            pts.append((i / h, jj / h, (h - i - jj) / h))
    return _subsample_rows(np.asarray(pts), n)


def _unit_sphere_points(m: int, n: int) -> np.ndarray:
    pts = _simplex_points(m, n)
    norms = np.linalg.norm(pts, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return pts / norms


def _degenerate_arc_points(m: int, n: int) -> np.ndarray:
    t = np.linspace(0.0, 1.0, n)
    arc = np.column_stack([t, 1.0 - t])
    arc = arc / np.linalg.norm(arc, axis=1, keepdims=True)
    if m == 2:
        return arc
    # m = 3: the front is the curve (a/sqrt(2), a/sqrt(2), b) with a^2+b^2=1.
    a, b = arc[:, 0], arc[:, 1]
    return np.column_stack([a / math.sqrt(2.0), a / math.sqrt(2.0), b])


def _staircase_region(n_points: int) -> np.ndarray:
    """Position values whose x(1+sin(3 pi x))/2 strictly exceeds all earlier ones.

    Picking front coordinates from this set makes any two distinct product
    points mutually non-dominated (larger coordinate implies strictly larger
    contribution to the last objective's negated sum).
    """
    grid = np.linspace(0.0, 1.0, 100_001)
    u = grid * (1.0 + np.sin(3.0 * np.pi * grid)) / 2.0
    running = np.maximum.accumulate(u)
    keep = np.ones(grid.size, dtype=bool)
    keep[1:] = u[1:] > running[:-1]
    region = grid[keep]
    return _subsample_rows(region[:, None], n_points)[:, 0]


def _staircase_front(m: int, n: int, scale: float) -> np.ndarray:
    """Disconnected DTLZ7-style front: f_m = scale * (m - sum x(1+sin(3 pi x))/2)."""
    if m == 2:
        x = _staircase_region(n)[:, None]
    else:
        per_dim = int(math.ceil(math.sqrt(n)))
        vals = _staircase_region(per_dim)
        g1, g2 = np.meshgrid(vals, vals, indexing="ij")
        x = np.column_stack([g1.ravel(), g2.ravel()])
        x = _subsample_rows(x, n)
    last = scale * (m - np.sum(x * (1.0 + np.sin(3.0 * np.pi * x)) / 2.0, axis=1))
    return np.column_stack([x, last])


# ---------------------------------------------------------------------------
# Public operations


def make_problem(suite: str, index: int, m: int, d: int) -> MopInstance:
    """Construct a benchmark instance; rejects unsupported combinations."""
    suite = str(suite).upper()
    if suite not in SUITES:
        raise ValueError(f"unsupported suite '{suite}' (expected one of {SUITES})")
    if m < 2:
        raise ValueError(f"m must be >= 2, got m={m}")
    if d < m:
        raise ValueError(f"d must be >= m, got d={d} with m={m}")

    if suite == "ZDT":
        if index not in _ZDT_INDICES:
            raise ValueError(
                f"unsupported ZDT index {index} (supported: {_ZDT_INDICES}; "
                "ZDT5 is binary-coded and excluded)"
            )
        if m != 2:
            raise ValueError(f"ZDT problems are bi-objective; got m={m}")
        lower = np.zeros(d)
        upper = np.ones(d)
        if index == 4:
            lower[1:] = -5.0
            upper[1:] = 5.0
        batch = _zdt_batch(index, d)
        front = lambda n: _zdt_front(index, n)  # noqa: E731
    elif suite == "DTLZ":
        if not 1 <= index <= 7:
            raise ValueError(f"unsupported DTLZ index {index} (supported: 1..7)")
        if m not in (2, 3):
            raise ValueError(f"DTLZ here supports m in {{2, 3}}; got m={m}")
        lower = np.zeros(d)
        upper = np.ones(d)
        batch = _dtlz_batch(index, m, d)
        front = lambda n: _dtlz_front(index, m, n)  # noqa: E731
    else:  # LSMOP
        if not 1 <= index <= 9:
            raise ValueError(f"unsupported LSMOP index {index} (supported: 1..9)")
        if m not in (2, 3):
            raise ValueError(f"LSMOP here supports m in {{2, 3}}; got m={m}")
        sublen, _ = _lsmop_layout(m, d)
        if np.any(sublen < 1):
            raise ValueError(
                f"d={d} is too small for LSMOP{index} with m={m}: the chaos-based "
                "variable grouping leaves an empty group (increase d)"
            )
        lower = np.concatenate([np.zeros(m - 1), np.zeros(d - m + 1)])
        upper = np.concatenate([np.ones(m - 1), 10.0 * np.ones(d - m + 1)])
        batch = _lsmop_batch(index, m, d)
        front = lambda n: _lsmop_front(index, m, n)  # noqa: E731

    return MopInstance(
        id=f"{suite}{index}-m{m}-d{d}",
        suite=suite,
        index=index,
        m=m,
        d=d,
        lower=lower,
        upper=upper,
        _batch_evaluator=batch,
        _front_sampler=front,
    )


def evaluate(
    instance: MopInstance,
    pop: Population,
    ledger: FeLedger,
    phase: str = "evaluation",
) -> Population:
    """Evaluate all rows of a raw-space population; books exactly N evaluations."""
    if pop.space_tag != SPACE_RAW:
        raise ValueError("evaluate expects a raw-space population")
    if pop.d != instance.d:
        raise ValueError(f"population has d={pop.d}, instance expects d={instance.d}")
    bad = ~np.isfinite(pop.decisions)
    if bad.any():
        r, c = np.argwhere(bad)[0]
        raise ValueError(f"non-finite decision entry at row {r}, column {c}")
    objectives = instance._batch_evaluator(pop.decisions)
    ledger.add(phase, pop.n)
    return Population(
        step=pop.step,
        decisions=pop.decisions,
        objectives=objectives,
        space_tag=SPACE_RAW,
    )


def sample_reference_front(instance: MopInstance, n: int) -> np.ndarray:
    """n points on the instance's analytic Pareto front (mutually non-dominated)."""
    if n < 1:
        raise ValueError(f"front size must be >= 1, got {n}")
    return instance._front_sampler(n)


def random_population(instance: MopInstance, n: int, seed: int) -> Population:
    """Componentwise-uniform random population within the box bounds."""
    if n < 2:
        raise ValueError(f"population size must be >= 2, got {n}")
    rng = np.random.default_rng(seed)
    decisions = rng.uniform(instance.lower, instance.upper, size=(n, instance.d))
    return Population(step=0, decisions=decisions, space_tag=SPACE_RAW)
