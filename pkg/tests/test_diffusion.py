import math

import numpy as np
import pytest

from emodm.attention import AttentionWeights
from emodm.diffusion import (
    ALPHA_MAX,
    NOISE_VAR_FLOOR,
    NoiseModel,
    PretrainedLibrary,
    StepModel,
    check_schedule,
    estimate_step,
    fit_transform,
    forward_noising,
    match_prompt,
    reverse_step,
    sample_pareto_set,
    train_forward,
)
from emodm.metrics import FeLedger
from emodm.moea import nsga2_run
from emodm.problems import make_problem


class ZeroRng:
    """Stand-in generator whose draws are pinned to zero."""

    def standard_normal(self, shape):
        return np.zeros(shape)


def make_step(
    t=2,
    alpha=0.9,
    d=3,
    alpha_bar=None,
    noise_mean=0.0,
    noise_var=0.0,
    prompt_mean=0.0,
    prompt_var=1.0,
    prev_mean=0.0,
    prev_var=1.0,
    signature=0.0,
):
    full = lambda v: np.full(d, float(v))  # noqa: E731
    return StepModel(
        t=t,
        alpha=alpha,
        alpha_bar=alpha if alpha_bar is None else alpha_bar,
        noise_mean=full(noise_mean),
        noise_var=full(noise_var),
        prompt_mean=full(prompt_mean),
        prompt_var=full(prompt_var),
        prev_mean=full(prev_mean),
        prev_var=full(prev_var),
        attention=AttentionWeights(step=t, w=np.full(d, 1.0 / d), avg_nmi=np.zeros(d), signature=signature),
        signature=signature,
    )


def make_library(signature_table, t_steps=3, d=3):
    """Library with given per-entry, per-step signatures and trivial statistics."""
    from emodm.diffusion import AffineTransform

    entries = []
    for k, sigs in enumerate(signature_table):
        steps = [make_step(t=t, d=d, signature=sigs[t - 1]) for t in range(1, t_steps + 1)]
        entries.append(
            NoiseModel(
                problem_id=f"entry{k}",
                d=d,
                m=2,
                n_pop=10,
                t_steps=t_steps,
                transform=AffineTransform(offset=np.zeros(d), scale=np.ones(d)),
                steps=steps,
                training_loss=0.0,
            )
        )
    return PretrainedLibrary(entries=entries, t_steps=t_steps, bins=4, use_attention=False)


@pytest.fixture(scope="module")
def zdt_small():
    instance = make_problem("ZDT", 1, 2, 8)
    trajectory = nsga2_run(instance, 20, 16, seed=0, ledger=FeLedger())
    library = train_forward([trajectory], use_attention=True)
    return instance, trajectory, library


class TestFitTransform:
    def test_standardizes_initial_generation(self, zdt_small):
        _, trajectory, _ = zdt_small
        tf = fit_transform(trajectory)
        z = tf.normalize(trajectory.generations[0].decisions)
        assert np.all(np.abs(z.mean(axis=0)) < 1e-9)
        assert np.all(np.abs(z.var(axis=0) - 1.0) < 1e-9)

    def test_round_trip(self, zdt_small):
        _, trajectory, _ = zdt_small
        tf = fit_transform(trajectory)
        x = trajectory.generations[3].decisions
        assert np.allclose(tf.denormalize(tf.normalize(x)), x, atol=1e-9)

    def test_constant_dimension_gets_unit_scale(self):
        from emodm.diffusion import _fit_affine

        data = np.column_stack([np.full(10, 3.5), np.arange(10.0)])
        tf = _fit_affine(data)
        assert tf.scale[0] == 1.0
        assert tf.offset[0] == 3.5
        assert np.all(tf.normalize(data)[:, 0] == 0.0)


class TestEstimateStep:
    def test_recovers_synthetic_schedule_value(self):
        rng = np.random.default_rng(0)
        z_prev = rng.normal(0.0, 2.0, size=(1000, 5))
        z_curr = math.sqrt(0.96) * z_prev + math.sqrt(0.04) * rng.standard_normal((1000, 5))
        alpha, _, _ = estimate_step(z_prev, z_curr)
        assert alpha == pytest.approx(0.96, abs=0.02)

    def test_identical_populations_hit_upper_clip(self):
        rng = np.random.default_rng(1)
        z = rng.normal(0.0, 2.0, size=(100, 4))
        alpha, _, _ = estimate_step(z, z)
        assert alpha == ALPHA_MAX

    def test_noise_variance_floor(self):
        rng = np.random.default_rng(2)
        z_prev = rng.normal(0.0, 2.0, size=(200, 3))
        alpha, _, noise_var = estimate_step(z_prev, np.zeros_like(z_prev))
        assert np.all(noise_var >= NOISE_VAR_FLOOR)

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            estimate_step(np.zeros((10, 3)), np.zeros((10, 4)))


class TestForwardNoising:
    def test_alpha_one_is_identity(self):
        rng = np.random.default_rng(3)
        z = rng.random((20, 4))
        assert np.array_equal(forward_noising(z, 1.0, rng), z)

    def test_seeded_reproducibility(self):
        z = np.zeros((10, 3))
        a = forward_noising(z, 0.5, np.random.default_rng(5))
        b = forward_noising(z, 0.5, np.random.default_rng(5))
        assert np.array_equal(a, b)

    def test_monte_carlo_variance(self):
        rng = np.random.default_rng(6)
        samples = [forward_noising(np.zeros((1, 1)), 0.75, rng)[0, 0] for _ in range(1000)]
        assert np.var(samples) == pytest.approx(0.25, abs=0.02)

    def test_closed_form_mean_after_iteration(self):
        # Mean over many trials of iterated noising matches sqrt(alpha_bar) * z0.
        alphas = [0.9, 0.8, 0.95]
        alpha_bar = float(np.prod(alphas))
        z0 = np.full((1, 4), 2.0)
        rng = np.random.default_rng(7)
        finals = []
        for _ in range(1000):
            z = z0
            for a in alphas:
                z = forward_noising(z, a, rng)
            finals.append(z[0])
        mean = np.mean(finals, axis=0)
        se = math.sqrt((1.0 - alpha_bar) / 1000)
        assert np.all(np.abs(mean - math.sqrt(alpha_bar) * 2.0) < 3 * se + 1e-12)

    def test_rejects_alpha_out_of_range(self):
        with pytest.raises(ValueError):
            forward_noising(np.zeros((2, 2)), 0.0, np.random.default_rng(0))


class TestReverseStep:
    def test_no_noise_limit_keeps_state(self):
        step = make_step(t=2, alpha=ALPHA_MAX, noise_var=0.0)
        z = np.random.default_rng(8).random((30, 3))
        out = reverse_step(z, step, ZeroRng())
        assert np.all(np.abs(out - z) < 1e-3)

    def test_zeroed_model_noise_scales_by_inverse_sqrt_alpha(self):
        step = make_step(t=1, alpha=0.81, alpha_bar=0.81, noise_var=0.0)
        z = np.random.default_rng(9).random((10, 3))
        assert np.allclose(reverse_step(z, step, ZeroRng()), z / 0.9, rtol=0, atol=1e-15)

    def test_output_shape(self):
        step = make_step(t=3, alpha=0.9)
        z = np.zeros((7, 3))
        assert reverse_step(z, step, np.random.default_rng(0)).shape == (7, 3)

    def test_affine_in_state_with_pinned_draws(self):
        step = make_step(t=4, alpha=0.85, noise_mean=0.3, noise_var=0.5, prompt_mean=0.2, prev_mean=-0.1)
        z = np.random.default_rng(10).random((6, 3))
        base = reverse_step(np.zeros_like(z), step, ZeroRng())
        one = reverse_step(z, step, ZeroRng())
        two = reverse_step(2.0 * z, step, ZeroRng())
        assert np.allclose(two - base, 2.0 * (one - base), atol=1e-12)

    def test_final_step_omits_additive_noise(self):
        step = make_step(t=1, alpha=0.9, noise_var=0.5)
        z = np.random.default_rng(11).random((5, 3))
        a = reverse_step(z, step, np.random.default_rng(1))
        b = reverse_step(z, step, np.random.default_rng(2))
        assert np.array_equal(a, b)

    def test_rejects_alpha_bar_at_one(self):
        step = make_step(t=2, alpha=0.9, alpha_bar=1.0)
        with pytest.raises(ValueError):
            reverse_step(np.zeros((2, 3)), step, ZeroRng())


class TestCheckSchedule:
    def test_log2_for_200(self):
        assert check_schedule(200, "log2") == [1, 2, 4, 8, 16, 32, 64, 128]

    def test_log2_for_2000_has_eleven(self):
        schedule = check_schedule(2000, "log2")
        assert len(schedule) == 11
        assert schedule[-1] == 1024

    def test_every_step(self):
        assert check_schedule(200, "every_step") == list(range(1, 201))

    def test_tenth_counts(self):
        schedule = check_schedule(200, "tenth")
        assert len(schedule) == 20
        assert 1 in schedule and 200 in schedule

    def test_first_only(self):
        assert check_schedule(200, "first_only") == [200]

    def test_unknown_mode_rejected(self):
        with pytest.raises(ValueError):
            check_schedule(200, "sometimes")


class TestMatchPrompt:
    def test_closest_signature_wins(self):
        lib = make_library([[0.2] * 3, [0.5] * 3])
        assert match_prompt(lib, 0.45, 2) == 1

    def test_single_entry(self):
        lib = make_library([[0.3] * 3])
        assert match_prompt(lib, 99.0, 1) == 0

    def test_exact_signature(self):
        lib = make_library([[0.2] * 3, [0.7] * 3])
        assert match_prompt(lib, 0.7, 3) == 1

    def test_tie_breaks_to_lowest_index(self):
        lib = make_library([[0.4] * 3, [0.6] * 3])
        assert match_prompt(lib, 0.5, 1) == 0

    def test_agrees_with_linear_scan(self):
        rng = np.random.default_rng(12)
        table = rng.random((100, 3)).tolist()
        lib = make_library(table)
        for _ in range(50):
            sig = float(rng.random())
            t = int(rng.integers(1, 4))
            oracle = min(range(100), key=lambda i: abs(sig - table[i][t - 1]))
            assert match_prompt(lib, sig, t) == oracle

    def test_step_out_of_range(self):
        lib = make_library([[0.2] * 3])
        with pytest.raises(ValueError):
            match_prompt(lib, 0.2, 4)


class TestTrainForward:
    def test_entry_and_step_counts(self, zdt_small):
        _, trajectory, library = zdt_small
        assert library.k == 1
        assert len(library.entries[0].steps) == trajectory.t_steps

    def test_alpha_bar_telescopes(self, zdt_small):
        _, _, library = zdt_small
        running = 1.0
        previous = 1.0
        for step in library.entries[0].steps:
            running *= step.alpha
            assert abs(step.alpha_bar - running) < 1e-9
            assert 0.0 < step.alpha_bar <= previous
            previous = step.alpha_bar

    def test_noise_variances_positive(self, zdt_small):
        _, _, library = zdt_small
        for step in library.entries[0].steps:
            assert np.all(step.noise_var > 0)

    def test_training_deterministic_bitwise(self, zdt_small):
        _, trajectory, _ = zdt_small
        a = train_forward([trajectory], use_attention=True)
        b = train_forward([trajectory], use_attention=True)
        for sa, sb in zip(a.entries[0].steps, b.entries[0].steps):
            assert sa.alpha == sb.alpha
            assert np.array_equal(sa.noise_mean, sb.noise_mean)
            assert np.array_equal(sa.noise_var, sb.noise_var)
            assert np.array_equal(sa.attention.w, sb.attention.w)

    def test_training_loss_finite_nonnegative(self, zdt_small):
        _, _, library = zdt_small
        loss = library.entries[0].training_loss
        assert math.isfinite(loss) and loss >= 0.0

    def test_no_attention_stores_uniform_weights(self, zdt_small):
        _, trajectory, _ = zdt_small
        library = train_forward([trajectory], use_attention=False)
        d = trajectory.d
        for step in library.entries[0].steps:
            assert np.array_equal(step.attention.w, np.full(d, 1.0 / d))

    def test_mixed_t_rejected(self, zdt_small):
        instance, trajectory, _ = zdt_small
        other = nsga2_run(instance, 20, 8, seed=1, ledger=FeLedger())
        with pytest.raises(ValueError, match="generation count"):
            train_forward([trajectory, other])

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            train_forward([])


class TestSamplePareto:
    def test_budget_matches_schedule(self, zdt_small):
        instance, _, library = zdt_small
        for mode, expected in (("log2", 5), ("every_step", 16), ("first_only", 1), ("tenth", 2)):
            led = FeLedger()
            sample_pareto_set(library, instance, 20, xi_mode=mode, seed=0, ledger=led)
            assert led.get("sampling") == 20 * expected, mode
            assert led.budgeted_total() == 20 * expected

    def test_deterministic(self, zdt_small):
        instance, _, library = zdt_small
        a, _ = sample_pareto_set(library, instance, 20, seed=3, ledger=FeLedger())
        b, _ = sample_pareto_set(library, instance, 20, seed=3, ledger=FeLedger())
        assert np.array_equal(a.decisions, b.decisions)
        assert np.array_equal(a.objectives, b.objectives)

    def test_output_clamped_and_nondominated(self, zdt_small):
        instance, _, library = zdt_small
        result, _ = sample_pareto_set(library, instance, 20, seed=4, ledger=FeLedger())
        from emodm.metrics import nondominated_mask

        assert np.all(result.decisions >= instance.lower)
        assert np.all(result.decisions <= instance.upper)
        assert nondominated_mask(result.objectives).all()

    def test_diagnostics_exempt_and_harmless(self, zdt_small):
        instance, _, library = zdt_small
        led_plain = FeLedger()
        plain, _ = sample_pareto_set(library, instance, 20, seed=5, ledger=led_plain)
        led_diag = FeLedger()
        diag, profile = sample_pareto_set(
            library, instance, 20, seed=5, ledger=led_diag, diagnostics=True, ref_size=100
        )
        assert np.array_equal(plain.decisions, diag.decisions)
        assert led_diag.get("sampling") == led_plain.get("sampling")
        assert led_diag.budgeted_total() == led_plain.budgeted_total()
        assert led_diag.get("diagnostics-exempt") == 20 * library.t_steps
        assert len(profile) == library.t_steps

    def test_narrower_instance_uses_leading_coordinates(self, zdt_small):
        _, _, library = zdt_small
        narrow = make_problem("ZDT", 1, 2, 5)
        result, _ = sample_pareto_set(library, narrow, 20, seed=6, ledger=FeLedger())
        assert result.decisions.shape[1] == 5
        assert np.all(result.decisions <= narrow.upper)

    def test_wider_instance_rejected(self, zdt_small):
        _, _, library = zdt_small
        wide = make_problem("ZDT", 1, 2, 50)
        with pytest.raises(ValueError, match="larger decision space"):
            sample_pareto_set(library, wide, 20, seed=0, ledger=FeLedger())

    def test_objective_count_mismatch_rejected(self, zdt_small):
        _, _, library = zdt_small
        tri = make_problem("DTLZ", 2, 3, 8)
        with pytest.raises(ValueError, match="m="):
            sample_pareto_set(library, tri, 20, seed=0, ledger=FeLedger())
