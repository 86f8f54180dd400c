"""Noise-model training on reversed search runs and Pareto set generation.

Coordinate frames
-----------------
Each trained model owns a per-dimension affine transform fitted to the run's
initial random population, so that diffusion-step T (the initial population)
has zero mean and unit variance. Step statistics are estimated in that
normalized frame, optionally rescaled per step by attention multipliers
(``d * softmax-weight``, so uniform attention is exactly the identity).

Noise estimation
----------------
The step transition is ``Z_t = sqrt(a_t) Z_{t-1} + sqrt(1-a_t) e_t`` with a
scalar schedule value a_t shared across dimensions (the mean of per-dimension
estimates) and diagonal Gaussian residual noise. The closed-form moment
estimate assumes unit noise variance first and is refined by re-estimation
sweeps until the moment-fit loss stops improving.

Reverse denoising
-----------------
The reverse update samples the exact conditional of the trained per-step
Gaussian chain. Writing V' for the step-(t-1) snapshot variance and
Vm = a_t V' + (1-a_t) S_t for the model-implied step-t variance,

    Z_{t-1} = prev_mean + g (Z_t - prompt_mean) + sqrt(btilde) eps,
    g = sqrt(a_t) V' / Vm,      btilde = V' (1-a_t) S_t / Vm,

with the additive term omitted at the final step t = 1. This is identical to
the noise-prediction form ``(Z_t - sqrt(1-a_t) eps_hat)/sqrt(a_t)`` with
``eps_hat`` the conditional expectation of the step noise given ``Z_t``,
``eps_hat = noise_mean + sqrt(1-a_t) noise_var / Vm * (Z_t - prompt_mean)``.
The prediction must condition on the state: an unconditional noise draw can
never cancel noise already present in the state, so the population spread
could not shrink below its starting level and the chain would stay pure
noise instead of contracting toward the converged population.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .attention import (
    AttentionWeights,
    compute_attention,
    default_bins,
    nmi_signature,
)
from .metrics import PHASE_DIAGNOSTICS, PHASE_SAMPLING, FeLedger, igd, nondominated_filter
from .moea import EvolutionaryTrajectory
from .problems import (
    SPACE_RAW,
    MopInstance,
    Population,
    evaluate,
    sample_reference_front,
)

ALPHA_MIN = 1e-4
ALPHA_MAX = 1.0 - 1e-4
NOISE_VAR_FLOOR = 1e-8
PROMPT_VAR_FLOOR = 1e-12
_NEUTRAL_TOL = 1e-6
_MAX_SWEEPS = 50
_SWEEP_TOL = 1e-6

XI_MODES = ("every_step", "tenth", "log2", "first_only")

#: Sub-stream tag for the sampling RNG under the documented seed-splitting rule.
_SAMPLING_STREAM = 2


# ---------------------------------------------------------------------------
# Normalization transform


@dataclass
class AffineTransform:
    """Per-dimension map between raw decision space and the diffusion frame."""

    offset: np.ndarray  # per-dimension mean of the fitted population
    scale: np.ndarray   # per-dimension std; zero-variance dimensions get 1

    def normalize(self, decisions: np.ndarray) -> np.ndarray:
        return (decisions - self.offset) / self.scale

    def denormalize(self, z: np.ndarray, d: int | None = None) -> np.ndarray:
        if d is None:
            d = z.shape[1]
        return z * self.scale[:d] + self.offset[:d]


def fit_transform(trajectory: EvolutionaryTrajectory) -> AffineTransform:
    """Affine map sending the run's initial population to zero mean, unit variance."""
    return _fit_affine(trajectory.generations[0].decisions)


def _fit_affine(decisions: np.ndarray) -> AffineTransform:
    offset = decisions.mean(axis=0)
    scale = decisions.std(axis=0)
    scale = np.where(scale > 0.0, scale, 1.0)
    return AffineTransform(offset=offset, scale=scale)


# ---------------------------------------------------------------------------
# Per-step noise estimation


def _estimate_with_prior(
    z_prev: np.ndarray, z_curr: np.ndarray, noise_var_prior: np.ndarray
) -> tuple[float, np.ndarray, np.ndarray]:
    v_prev = z_prev.var(axis=0)
    v_curr = z_curr.var(axis=0)
    denom = v_prev - noise_var_prior
    ratio = np.divide(
        v_curr - noise_var_prior,
        denom,
        out=np.full_like(v_prev, ALPHA_MAX),
        where=np.abs(denom) > _NEUTRAL_TOL,
    )
    alpha = float(np.clip(ratio, ALPHA_MIN, ALPHA_MAX).mean())
    beta = 1.0 - alpha
    noise_mean = (z_curr.mean(axis=0) - math.sqrt(alpha) * z_prev.mean(axis=0)) / math.sqrt(beta)
    noise_var = np.maximum(NOISE_VAR_FLOOR, (v_curr - alpha * v_prev) / beta)
    return alpha, noise_mean, noise_var


def estimate_step(z_prev: np.ndarray, z_curr: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
    """Closed-form schedule and residual-noise estimate for one step transition.

    ``z_prev``/``z_curr`` are normalized populations at steps t-1 and t. The
    per-dimension schedule estimates assume unit-variance injected noise (the
    frame is calibrated so the fully-noised step-T population has variance 1);
    the scalar schedule value is their mean. Residual noise statistics follow
    by inverting the step transition at the distribution level.
    """
    z_prev = np.asarray(z_prev, dtype=float)
    z_curr = np.asarray(z_curr, dtype=float)
    if z_prev.ndim != 2 or z_prev.shape != z_curr.shape:
        raise ValueError(f"population shape mismatch: {z_prev.shape} vs {z_curr.shape}")
    return _estimate_with_prior(z_prev, z_curr, np.ones(z_prev.shape[1]))


def _estimate_with_sweeps(
    z_prev: np.ndarray, z_curr: np.ndarray
) -> tuple[float, np.ndarray, np.ndarray, float]:
    """estimate_step refined by re-estimation sweeps until the fit converges.

    Each sweep re-solves the moment equations using the previous sweep's
    noise-variance estimate in place of the unit prior. The loss is the mean
    squared residual of the implied step-transition moments (zero unless
    clipping or flooring engaged).
    """
    v_prev = z_prev.var(axis=0)
    v_curr = z_curr.var(axis=0)
    m_prev = z_prev.mean(axis=0)
    m_curr = z_curr.mean(axis=0)

    prior = np.ones(z_prev.shape[1])
    best: tuple[float, np.ndarray, np.ndarray] | None = None
    best_loss = math.inf
    for _ in range(_MAX_SWEEPS):
        alpha, noise_mean, noise_var = _estimate_with_prior(z_prev, z_curr, prior)
        beta = 1.0 - alpha
        mean_resid = m_curr - (math.sqrt(alpha) * m_prev + math.sqrt(beta) * noise_mean)
        var_resid = v_curr - (alpha * v_prev + beta * noise_var)
        loss = float(np.mean(mean_resid**2) + np.mean(var_resid**2))
        if loss < best_loss:
            best = (alpha, noise_mean, noise_var)
            improvement = best_loss - loss
            best_loss = loss
            if improvement < _SWEEP_TOL:
                break
            prior = noise_var
        else:
            break
    assert best is not None
    return best[0], best[1], best[2], best_loss


# ---------------------------------------------------------------------------
# Trained model containers


@dataclass
class StepModel:
    """Noise statistics for one diffusion step, in that step's attention frame."""

    t: int
    alpha: float
    alpha_bar: float
    noise_mean: np.ndarray   # per-step residual noise mean
    noise_var: np.ndarray    # per-step residual noise variance (diagonal)
    prompt_mean: np.ndarray  # moments of the step-t training snapshot
    prompt_var: np.ndarray
    prev_mean: np.ndarray    # moments of the step-(t-1) snapshot, same frame
    prev_var: np.ndarray
    attention: AttentionWeights
    signature: float


@dataclass
class NoiseModel:
    """All step models learned from one recorded run, plus its normalization."""

    problem_id: str
    d: int
    m: int
    n_pop: int
    t_steps: int
    transform: AffineTransform
    steps: list[StepModel]  # steps[t-1] holds step t
    training_loss: float

    def step(self, t: int) -> StepModel:
        if not 1 <= t <= self.t_steps:
            raise ValueError(f"step {t} outside 1..{self.t_steps}")
        return self.steps[t - 1]

    def multipliers(self, t: int, d: int | None = None) -> np.ndarray:
        """Attention rescaling applied in step t's frame (1 everywhere when uniform)."""
        w = self.step(t).attention.w
        mult = self.d * w
        return mult if d is None else mult[:d]


@dataclass
class PretrainedLibrary:
    """Noise models for K trained problems sharing one step count."""

    entries: list[NoiseModel]
    t_steps: int
    bins: int
    use_attention: bool

    @property
    def k(self) -> int:
        return len(self.entries)

    @property
    def max_d(self) -> int:
        return max(e.d for e in self.entries)


# ---------------------------------------------------------------------------
# Forward training


def train_forward(
    trajectories: list[EvolutionaryTrajectory],
    use_attention: bool = True,
    bins: int | None = None,
) -> PretrainedLibrary:
    """Fit one noise model per recorded run (the forward-diffusion training pass).

    For each step t (reading the run backwards), the pair of consecutive
    snapshots is normalized, rescaled by that step's attention multipliers,
    and fed to the sweep-refined moment estimator. Disabling attention stores
    uniform weights (identity multipliers); signatures are always recorded
    because sampling matches problems through them.
    """
    if not trajectories:
        raise ValueError("need at least one trajectory")
    t_steps = trajectories[0].t_steps
    mismatched = [t.problem_id for t in trajectories if t.t_steps != t_steps]
    if mismatched:
        raise ValueError(
            f"all trajectories must share the same generation count {t_steps}; "
            f"offending runs: {mismatched}"
        )
    if bins is None:
        bins = default_bins(trajectories[0].n_pop)

    entries = [_train_entry(traj, use_attention, bins) for traj in trajectories]
    return PretrainedLibrary(entries=entries, t_steps=t_steps, bins=bins, use_attention=use_attention)


def _train_entry(traj: EvolutionaryTrajectory, use_attention: bool, bins: int) -> NoiseModel:
    d, t_steps = traj.d, traj.t_steps
    transform = fit_transform(traj)
    normalized = [transform.normalize(g.decisions) for g in traj.generations]
    uniform = np.full(d, 1.0 / d)
    steps: list[StepModel] = []
    alpha_bar = 1.0
    loss_sum = 0.0
    for t in range(1, t_steps + 1):
        snapshot = traj.step_snapshot(t)  # generation T-t, raw frame
        aw = compute_attention(snapshot, bins)
        w = aw.w if use_attention else uniform
        stored = AttentionWeights(step=t, w=w, avg_nmi=aw.avg_nmi, signature=aw.signature)
        mult = d * w

        z_prev = mult * normalized[t_steps - t + 1]
        z_curr = mult * normalized[t_steps - t]
        alpha, noise_mean, noise_var, loss = _estimate_with_sweeps(z_prev, z_curr)
        loss_sum += loss
        alpha_bar *= alpha

        steps.append(
            StepModel(
                t=t,
                alpha=alpha,
                alpha_bar=alpha_bar,
                noise_mean=noise_mean,
                noise_var=noise_var,
                prompt_mean=z_curr.mean(axis=0),
                prompt_var=np.maximum(PROMPT_VAR_FLOOR, z_curr.var(axis=0)),
                prev_mean=z_prev.mean(axis=0),
                prev_var=np.maximum(PROMPT_VAR_FLOOR, z_prev.var(axis=0)),
                attention=stored,
                signature=aw.signature,
            )
        )

    return NoiseModel(
        problem_id=traj.problem_id,
        d=d,
        m=traj.m,
        n_pop=traj.n_pop,
        t_steps=t_steps,
        transform=transform,
        steps=steps,
        training_loss=loss_sum / t_steps,
    )


# ---------------------------------------------------------------------------
# Forward / reverse step kernels


def forward_noising(z_prev: np.ndarray, alpha: float, rng: np.random.Generator) -> np.ndarray:
    """One forward noising step: sqrt(a) z + sqrt(1-a) eps."""
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    z_prev = np.asarray(z_prev, dtype=float)
    if alpha == 1.0:
        return z_prev.copy()
    eps = rng.standard_normal(z_prev.shape)
    return math.sqrt(alpha) * z_prev + math.sqrt(1.0 - alpha) * eps


def reverse_step(z_t: np.ndarray, step: StepModel, rng: np.random.Generator) -> np.ndarray:
    """One reverse denoising step (inputs and outputs in the step's frame).

    Samples the conditional distribution of the step-(t-1) state given the
    step-t state under the trained Gaussian transition; see the module
    docstring for the equivalent noise-prediction form. At t = 1 the additive
    noise term is omitted (final-step convention), leaving the conditional
    mean.
    """
    if step.alpha_bar >= 1.0:
        raise ValueError(f"alpha_bar must be < 1, got {step.alpha_bar}")
    z_t = np.asarray(z_t, dtype=float)
    d = z_t.shape[1]
    alpha = step.alpha
    beta = 1.0 - alpha
    v_prev = step.prev_var[:d]
    v_model = alpha * v_prev + beta * step.noise_var[:d]
    gain = math.sqrt(alpha) * v_prev / v_model
    out = step.prev_mean[:d] + gain * (z_t - step.prompt_mean[:d])
    if step.t > 1:
        cond_var = v_prev * beta * step.noise_var[:d] / v_model
        out = out + np.sqrt(cond_var) * rng.standard_normal(z_t.shape)
    return out


# ---------------------------------------------------------------------------
# Check schedule and problem matching


def check_schedule(t_steps: int, xi_mode: str = "log2") -> list[int]:
    """Steps at which reverse diffusion re-checks problem similarity.

    log2 (default): powers of two up to T, so the budget is
    N * (floor(log2 T) + 1) evaluations. every_step: all steps. tenth:
    ceil(T/10) checks counting down from T with the last one at step 1.
    first_only: a single check at step T (the start of reverse diffusion).
    """
    if t_steps < 1:
        raise ValueError(f"t_steps must be >= 1, got {t_steps}")
    if xi_mode == "log2":
        return [2**i for i in range(int(math.log2(t_steps)) + 1)]
    if xi_mode == "every_step":
        return list(range(1, t_steps + 1))
    if xi_mode == "tenth":
        n_checks = math.ceil(t_steps / 10)
        interval = math.ceil(t_steps / n_checks)
        steps = {t_steps - j * interval for j in range(n_checks - 1)}
        steps = {s for s in steps if s >= 1}
        steps.add(1)
        return sorted(steps)
    if xi_mode == "first_only":
        return [t_steps]
    raise ValueError(f"unknown xi mode '{xi_mode}' (expected one of {XI_MODES})")


def match_prompt(library: PretrainedLibrary, signature: float, t: int) -> int:
    """Index of the entry whose step-t signature is closest; ties to the lowest index."""
    if library.k < 1:
        raise ValueError("library is empty")
    if not 1 <= t <= library.t_steps:
        raise ValueError(f"step {t} outside 1..{library.t_steps}")
    gaps = np.array([abs(signature - e.step(t).signature) for e in library.entries])
    return int(np.argmin(gaps))


# ---------------------------------------------------------------------------
# Pareto set generation


def sample_pareto_set(
    library: PretrainedLibrary,
    instance: MopInstance,
    n_pop: int,
    xi_mode: str = "log2",
    seed: int = 0,
    ledger: FeLedger | None = None,
    diagnostics: bool = False,
    ref_size: int = 1000,
) -> tuple[Population, list[tuple[int, float]] | None]:
    """Generate an approximate Pareto set for ``instance`` by reverse diffusion.

    The state starts as N(0, I) in the active model's normalized frame; at
    every scheduled check step it is denormalized, clamped to the box,
    evaluated (booking N evaluations), and the most similar trained problem is
    re-selected by signature. The returned set is the non-dominated subset of
    the last checked population, so the budget is exactly
    ``n_pop * len(check_schedule(T, xi_mode))`` evaluations.

    A library trained on more decision variables than the instance has uses
    the leading ``instance.d`` coordinates of its statistics; the converse
    (instance wider than the library) is rejected. Diagnostics mode records an
    IGD value after every reverse step; those probe evaluations are booked to
    the diagnostics-exempt ledger phase and do not alter the generated set.
    """
    if library.k < 1:
        raise ValueError("library is empty")
    if instance.d > library.max_d:
        raise ValueError(
            f"instance has d={instance.d} but the library was trained on at most "
            f"d={library.max_d}; a pretrained model cannot generate for a problem "
            "with a larger decision space than it was trained on"
        )
    wrong_m = [e.problem_id for e in library.entries if e.m != instance.m]
    if wrong_m:
        raise ValueError(
            f"instance has m={instance.m} objectives but library entries {wrong_m} differ"
        )
    if ledger is None:
        ledger = FeLedger()

    t_steps = library.t_steps
    d = instance.d
    checks = set(check_schedule(t_steps, xi_mode))
    rng = np.random.default_rng([seed, _SAMPLING_STREAM])
    state = rng.standard_normal((n_pop, d))
    active = library.entries[0]
    last_checked: Population | None = None
    profile: list[tuple[int, float]] | None = None
    reference = None
    if diagnostics:
        profile = []
        reference = sample_reference_front(instance, ref_size)

    for t in range(t_steps, 0, -1):
        if t in checks:
            raw = instance.clamp(active.transform.denormalize(state, d))
            pop = evaluate(
                instance, Population(step=t, decisions=raw, space_tag=SPACE_RAW),
                ledger, phase=PHASE_SAMPLING,
            )
            sig = nmi_signature(raw, pop.objectives, library.bins)
            active = library.entries[match_prompt(library, sig, t)]
            last_checked = pop
        mult = active.multipliers(t, d)
        scaled = reverse_step(state * mult, active.step(t), rng)
        state = scaled / mult
        if diagnostics:
            raw = instance.clamp(active.transform.denormalize(state, d))
            probe = evaluate(
                instance, Population(step=t - 1, decisions=raw, space_tag=SPACE_RAW),
                ledger, phase=PHASE_DIAGNOSTICS,
            )
            profile.append((t, igd(reference, probe.objectives)))

    assert last_checked is not None  # every mode schedules at least one check
    archive = nondominated_filter(last_checked.decisions, last_checked.objectives)
    result = Population(
        step=0, decisions=archive.decisions, objectives=archive.objectives, space_tag=SPACE_RAW
    )
    return result, profile
