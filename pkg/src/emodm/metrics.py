"""Pareto-dominance primitives, the IGD indicator, and function-evaluation accounting.

Minimization convention throughout: an objective vector a dominates b iff
a is no worse in every component and strictly better in at least one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

#: Ledger phases. Evaluations booked under DIAGNOSTICS are excluded from the
#: budgeted total (they exist so IGD probes of intermediate states do not
#: pollute the evaluation budget).
PHASE_TRAJECTORY = "trajectory-generation"
PHASE_SAMPLING = "sampling"
PHASE_DIAGNOSTICS = "diagnostics-exempt"


@dataclass
class FeLedger:
    """Monotone counters of objective-function evaluations, labeled by phase."""

    counts: dict[str, int] = field(default_factory=dict)

    def add(self, phase: str, n: int) -> None:
        if n < 0:
            raise ValueError(f"ledger increment must be non-negative, got {n}")
        self.counts[phase] = self.counts.get(phase, 0) + int(n)

    def get(self, phase: str) -> int:
        return self.counts.get(phase, 0)

    def budgeted_total(self) -> int:
        """Total evaluations excluding the diagnostics-exempt phase."""
        return sum(v for k, v in self.counts.items() if k != PHASE_DIAGNOSTICS)

    def total(self) -> int:
        return sum(self.counts.values())


def dominates(a: np.ndarray, b: np.ndarray) -> bool:
    """True iff objective vector ``a`` Pareto-dominates ``b`` (minimization)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"objective vectors differ in length: {a.shape} vs {b.shape}")
    return bool(np.all(a <= b) and np.any(a < b))


def _domination_matrix(objectives: np.ndarray) -> np.ndarray:
    """Boolean matrix D with D[i, j] = row i dominates row j."""
    f = objectives[:, None, :]  # (n, 1, m)
    g = objectives[None, :, :]  # (1, n, m)
    return np.all(f <= g, axis=2) & np.any(f < g, axis=2)


def nondominated_mask(objectives: np.ndarray) -> np.ndarray:
    """Boolean mask of rows not dominated by any other row.

    Duplicate objective vectors never dominate each other, so all copies
    of a non-dominated point are kept.
    """
    objectives = np.asarray(objectives, dtype=float)
    if objectives.ndim != 2:
        raise ValueError("expected an N x m objective matrix")
    dom = _domination_matrix(objectives)
    return ~dom.any(axis=0)


@dataclass
class ParetoArchive:
    """A mutually non-dominated set of (decision, objective) pairs."""

    decisions: np.ndarray
    objectives: np.ndarray

    def __len__(self) -> int:
        return self.objectives.shape[0]


def nondominated_filter(decisions: np.ndarray, objectives: np.ndarray) -> ParetoArchive:
    """Keep exactly the points whose objectives are not dominated by any input point."""
    decisions = np.asarray(decisions, dtype=float)
    objectives = np.asarray(objectives, dtype=float)
    if decisions.shape[0] != objectives.shape[0]:
        raise ValueError("decision and objective row counts differ")
    mask = nondominated_mask(objectives)
    return ParetoArchive(decisions[mask].copy(), objectives[mask].copy())


def igd(reference: np.ndarray, approximation: np.ndarray) -> float:
    """Inverted generational distance.

    Mean, over reference points, of the Euclidean distance to the nearest
    approximation point. Lower is better; 0 means every reference point is
    covered exactly.
    """
    reference = np.asarray(reference, dtype=float)
    approximation = np.asarray(approximation, dtype=float)
    if reference.size == 0 or approximation.size == 0:
        raise ValueError("igd requires non-empty reference and approximation sets")
    if reference.ndim != 2 or approximation.ndim != 2:
        raise ValueError("igd expects 2-D point sets")
    if reference.shape[1] != approximation.shape[1]:
        raise ValueError(
            f"objective dimension mismatch: reference has {reference.shape[1]}, "
            f"approximation has {approximation.shape[1]}"
        )
    # Chunk over reference points to bound memory for large reference sets.
    mins = np.empty(reference.shape[0])
    step = max(1, 2_000_000 // max(1, approximation.shape[0]))
    for start in range(0, reference.shape[0], step):
        block = reference[start : start + step]
        d2 = np.sum((block[:, None, :] - approximation[None, :, :]) ** 2, axis=2)
        mins[start : start + block.shape[0]] = np.sqrt(d2.min(axis=1))
    return float(mins.mean())
