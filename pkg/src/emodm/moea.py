"""Elitist NSGA-II and the generation-by-generation run records it produces.

The engine follows Deb et al. (2002): fast non-dominated sorting, crowding
distance, binary tournament selection, simulated binary crossover, and
polynomial mutation. Every surviving generation is recorded, because the
full run record is the training signal for the diffusion stage.

All tie-breaks (tournaments, survival sorting) resolve to the lower row
index so that runs are exactly reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .metrics import PHASE_TRAJECTORY, FeLedger, _domination_matrix
from .problems import SPACE_RAW, MopInstance, Population, evaluate, random_population

#: De facto standard NSGA-II variation settings (pm defaults to 1/d at call time).
DEFAULT_PC = 1.0
DEFAULT_ETA_C = 20.0
DEFAULT_ETA_M = 20.0

#: Sub-stream tag for the variation RNG under the documented seed-splitting rule.
_VARIATION_STREAM = 1


@dataclass
class EvolutionaryTrajectory:
    """The populations of one optimization run, in forward evolutionary order.

    ``generations[0]`` is the random initial population and ``generations[T]``
    the final one; all have objectives present. The run doubles as a record of
    T+1 diffusion steps read in reverse: the snapshot for step t is
    ``generations[T - t]``.
    """

    problem_id: str
    n_pop: int
    t_steps: int
    m: int
    d: int
    generations: list[Population]

    def __post_init__(self) -> None:
        if len(self.generations) != self.t_steps + 1:
            raise ValueError(
                f"trajectory must hold T+1={self.t_steps + 1} generations, "
                f"got {len(self.generations)}"
            )
        for g in self.generations:
            if g.objectives is None:
                raise ValueError("every recorded generation needs objectives")

    def step_snapshot(self, t: int) -> Population:
        """Population serving as the diffusion-step-t snapshot (generation T-t)."""
        if not 0 <= t <= self.t_steps:
            raise ValueError(f"step {t} outside 0..{self.t_steps}")
        return self.generations[self.t_steps - t]


def fast_nondominated_sort(objectives: np.ndarray) -> list[np.ndarray]:
    """Partition row indices into fronts; front 0 is the non-dominated set."""
    objectives = np.asarray(objectives, dtype=float)
    if not np.isfinite(objectives).all():
        raise ValueError("objectives must be finite")
    n = objectives.shape[0]
    dom = _domination_matrix(objectives)
    n_dominators = dom.sum(axis=0).astype(int)
    fronts: list[np.ndarray] = []
    remaining = n_dominators.copy()
    assigned = np.zeros(n, dtype=bool)
    while not assigned.all():
        current = np.flatnonzero((remaining == 0) & ~assigned)
        fronts.append(current)
        assigned[current] = True
        remaining -= dom[current].sum(axis=0)
    return fronts


def crowding_distance(front_objectives: np.ndarray) -> np.ndarray:
    """Crowding distance per row; boundary rows per objective get infinity."""
    f = np.asarray(front_objectives, dtype=float)
    k, m = f.shape
    if k <= 2:
        return np.full(k, np.inf)
    dist = np.zeros(k)
    for j in range(m):
        order = np.argsort(f[:, j], kind="stable")  # ties keep row order
        vals = f[order, j]
        dist[order[0]] = np.inf
        dist[order[-1]] = np.inf
        span = vals[-1] - vals[0]
        if span == 0.0:
            continue
        interior = order[1:-1]
        dist[interior] += (vals[2:] - vals[:-2]) / span
    return dist


def rank_and_crowding(objectives: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    ranks = np.empty(objectives.shape[0], dtype=int)
    crowd = np.empty(objectives.shape[0])
    for r, front in enumerate(fast_nondominated_sort(objectives)):
        ranks[front] = r
        crowd[front] = crowding_distance(objectives[front])
    return ranks, crowd


def _tournament(ranks: np.ndarray, crowd: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Binary tournament winners, one per population slot."""
    n = ranks.shape[0]
    a = rng.integers(0, n, size=n)
    b = rng.integers(0, n, size=n)
    a_wins = (ranks[a] < ranks[b]) | (
        (ranks[a] == ranks[b]) & (crowd[a] > crowd[b])
    ) | ((ranks[a] == ranks[b]) & (crowd[a] == crowd[b]) & (a <= b))
    return np.where(a_wins, a, b)


def _sbx(
    p1: np.ndarray,
    p2: np.ndarray,
    lower: np.ndarray,
    upper: np.ndarray,
    pc: float,
    eta_c: float,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Bounded simulated binary crossover on paired parent matrices."""
    pairs, d = p1.shape
    do_pair = rng.random((pairs, 1)) <= pc
    do_var = rng.random((pairs, d)) <= 0.5
    u = rng.random((pairs, d))
    swap = rng.random((pairs, d)) <= 0.5

    y1 = np.minimum(p1, p2)
    y2 = np.maximum(p1, p2)
    delta = y2 - y1
    apply = do_pair & do_var & (delta > 1e-14)
    delta_safe = np.where(delta > 1e-14, delta, 1.0)

    beta1 = 1.0 + 2.0 * (y1 - lower) / delta_safe
    beta2 = 1.0 + 2.0 * (upper - y2) / delta_safe
    alpha1 = 2.0 - beta1 ** -(eta_c + 1.0)
    alpha2 = 2.0 - beta2 ** -(eta_c + 1.0)

    def betaq(alpha: np.ndarray) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            lo = (u * alpha) ** (1.0 / (eta_c + 1.0))
            hi = (1.0 / (2.0 - u * alpha)) ** (1.0 / (eta_c + 1.0))
        return np.where(u <= 1.0 / alpha, lo, hi)

    c1 = 0.5 * ((y1 + y2) - betaq(alpha1) * delta_safe)
    c2 = 0.5 * ((y1 + y2) + betaq(alpha2) * delta_safe)
    c1 = np.clip(c1, lower, upper)
    c2 = np.clip(c2, lower, upper)
    c1s = np.where(swap, c2, c1)
    c2s = np.where(swap, c1, c2)
    o1 = np.where(apply, c1s, p1)
    o2 = np.where(apply, c2s, p2)
    return o1, o2


def _polynomial_mutation(
    x: np.ndarray,
    lower: np.ndarray,
    upper: np.ndarray,
    pm: float,
    eta_m: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Bounded polynomial mutation, applied per variable with probability pm."""
    n, d = x.shape
    do = rng.random((n, d)) <= pm
    u = rng.random((n, d))
    span = upper - lower
    span_safe = np.where(span > 0.0, span, 1.0)
    d1 = (x - lower) / span_safe
    d2 = (upper - x) / span_safe
    lo_mask = u < 0.5
    dq_lo = (2.0 * u + (1.0 - 2.0 * u) * (1.0 - d1) ** (eta_m + 1.0)) ** (1.0 / (eta_m + 1.0)) - 1.0
    dq_hi = 1.0 - (2.0 * (1.0 - u) + 2.0 * (u - 0.5) * (1.0 - d2) ** (eta_m + 1.0)) ** (
        1.0 / (eta_m + 1.0)
    )
    dq = np.where(lo_mask, dq_lo, dq_hi)
    out = np.where(do, x + dq * span, x)
    return np.clip(out, lower, upper)


def vary(
    parents: Population,
    rng: np.random.Generator,
    pc: float = DEFAULT_PC,
    eta_c: float = DEFAULT_ETA_C,
    pm: float | None = None,
    eta_m: float = DEFAULT_ETA_M,
    bounds: tuple[np.ndarray, np.ndarray] | None = None,
) -> Population:
    """Produce N offspring by tournament selection + SBX + polynomial mutation."""
    if parents.objectives is None:
        raise ValueError("vary needs parent objectives for tournament selection")
    if bounds is None:
        raise ValueError("vary needs box bounds for clamping")
    if not (0.0 <= pc <= 1.0):
        raise ValueError(f"pc must lie in [0, 1], got {pc}")
    if pm is None:
        pm = 1.0 / parents.d
    if not (0.0 <= pm <= 1.0):
        raise ValueError(f"pm must lie in [0, 1], got {pm}")
    if eta_c <= 0 or eta_m <= 0:
        raise ValueError("distribution indices must be positive")
    lower, upper = bounds

    ranks, crowd = rank_and_crowding(parents.objectives)
    chosen = _tournament(ranks, crowd, rng)
    mating = parents.decisions[chosen]
    half = mating.shape[0] // 2
    o1, o2 = _sbx(mating[:half], mating[half : 2 * half], lower, upper, pc, eta_c, rng)
    offspring = np.vstack([o1, o2])
    if mating.shape[0] % 2 == 1:  # odd leftover passes through untouched
        offspring = np.vstack([offspring, mating[-1:]])
    offspring = _polynomial_mutation(offspring, lower, upper, pm, eta_m, rng)
    return Population(step=parents.step + 1, decisions=offspring, space_tag=SPACE_RAW)


def _environmental_selection(
    decisions: np.ndarray, objectives: np.ndarray, n_survivors: int
) -> np.ndarray:
    """Indices surviving elitist selection: whole fronts, then crowding."""
    fronts = fast_nondominated_sort(objectives)
    survivors: list[int] = []
    for front in fronts:
        if len(survivors) + front.size <= n_survivors:
            survivors.extend(front.tolist())
            continue
        crowd = crowding_distance(objectives[front])
        # Descending crowding distance, ties by lower row index.
        order = np.lexsort((front, -crowd))
        survivors.extend(front[order][: n_survivors - len(survivors)].tolist())
        break
    return np.asarray(survivors, dtype=int)


def nsga2_run(
    instance: MopInstance,
    n_pop: int,
    t_steps: int,
    seed: int,
    ledger: FeLedger,
    pc: float = DEFAULT_PC,
    eta_c: float = DEFAULT_ETA_C,
    pm: float | None = None,
    eta_m: float = DEFAULT_ETA_M,
) -> EvolutionaryTrajectory:
    """Run NSGA-II for t_steps generations, recording every surviving population.

    Books exactly n_pop * (t_steps + 1) objective evaluations (the initial
    population plus one offspring batch per generation).
    """
    if n_pop % 2 != 0 or n_pop < 2:
        raise ValueError(f"population size must be even and >= 2, got {n_pop}")
    if t_steps < 1:
        raise ValueError(f"generation count must be >= 1, got {t_steps}")

    rng = np.random.default_rng([seed, _VARIATION_STREAM])
    current = evaluate(
        instance, random_population(instance, n_pop, seed), ledger, phase=PHASE_TRAJECTORY
    )
    recorded = [current]
    for gen in range(1, t_steps + 1):
        offspring = vary(
            current, rng, pc=pc, eta_c=eta_c, pm=pm, eta_m=eta_m,
            bounds=(instance.lower, instance.upper),
        )
        offspring = evaluate(instance, offspring, ledger, phase=PHASE_TRAJECTORY)
        pool_dec = np.vstack([current.decisions, offspring.decisions])
        pool_obj = np.vstack([current.objectives, offspring.objectives])
        keep = _environmental_selection(pool_dec, pool_obj, n_pop)
        current = Population(
            step=gen, decisions=pool_dec[keep].copy(), objectives=pool_obj[keep].copy(),
            space_tag=SPACE_RAW,
        )
        recorded.append(current)

    return EvolutionaryTrajectory(
        problem_id=instance.id,
        n_pop=n_pop,
        t_steps=t_steps,
        m=instance.m,
        d=instance.d,
        generations=recorded,
    )
