"""Command-line interface: record search runs, train, sample, evaluate.

Every command is a pure function of its flags and input files: reruns with
identical configuration produce byte-identical outputs. One master seed per
run expands into fixed sub-streams (variation stream ``[seed, 1]``, sampling
stream ``[seed, 2]``; the initial population uses the seed directly), so
run recording and sampling never share random draws.

Errors exit with status 2 and a single ``error: ...`` line on stderr.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .diffusion import XI_MODES, check_schedule, sample_pareto_set, train_forward
from .metrics import PHASE_SAMPLING, PHASE_TRAJECTORY, FeLedger, igd, nondominated_filter
from .moea import nsga2_run
from .persist import (
    read_library,
    read_points_csv,
    read_trajectory,
    write_library,
    write_points_csv,
    write_profile_csv,
    write_report_csv,
    write_trajectory,
)
from .plotting import plot_front_comparison, plot_igd_profile
from .problems import make_problem, evaluate as evaluate_pop, random_population, sample_reference_front


def _instance_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--suite", required=True, choices=["ZDT", "DTLZ", "LSMOP"])
    parser.add_argument("--index", type=int, required=True, action="append",
                        help="instance index; repeat for several instances")
    parser.add_argument("--m", type=int, required=True, help="objective count")
    parser.add_argument("--d", type=int, required=True, help="decision variable count")


def _seeded_path(base: str | Path, seed: int, multi: bool) -> Path:
    base = Path(base)
    if not multi:
        return base
    return base.with_name(f"{base.stem}_s{seed}{base.suffix}")


def cmd_gen_trajectories(args: argparse.Namespace) -> int:
    instances = [make_problem(args.suite, idx, args.m, args.d) for idx in args.index]
    if args.n_pop % 2 != 0 or args.n_pop < 2:
        raise ValueError(f"--n-pop must be even and >= 2, got {args.n_pop}")
    if args.t_steps < 1:
        raise ValueError(f"--t-steps must be >= 1, got {args.t_steps}")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    total = 0
    for instance in instances:
        for seed in args.seed:
            ledger = FeLedger()
            trajectory = nsga2_run(instance, args.n_pop, args.t_steps, seed, ledger)
            path = out_dir / f"{instance.id}-s{seed}.jsonl"
            write_trajectory(path, trajectory, instance, seed)
            fes = ledger.get(PHASE_TRAJECTORY)
            total += fes
            print(f"wrote {path} (function evaluations: {fes})")
    print(f"total function evaluations: {total}")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    loaded = [(path, *read_trajectory(path)) for path in args.trajectories]
    t_values = {traj.t_steps for _, traj, _, _ in loaded}
    if len(t_values) > 1:
        offenders = {str(p): traj.t_steps for p, traj, _, _ in loaded}
        raise ValueError(f"trajectory files disagree on the generation count: {offenders}")
    library = train_forward(
        [traj for _, traj, _, _ in loaded], use_attention=not args.no_attention
    )
    write_library(args.out, library, input_files=list(args.trajectories))
    print(f"wrote {args.out} (entries: {library.k}, steps: {library.t_steps}, "
          f"bins: {library.bins}, attention: {library.use_attention})")
    for entry in library.entries:
        print(f"  {entry.problem_id}: training loss {entry.training_loss!r}")
    return 0


def cmd_sample(args: argparse.Namespace) -> int:
    library = read_library(args.lib)
    if len(args.index) != 1:
        raise ValueError("sample expects exactly one --index")
    instance = make_problem(args.suite, args.index[0], args.m, args.d)
    if instance.d > library.max_d:
        raise ValueError(
            f"instance has d={instance.d} but the library was trained on at most "
            f"d={library.max_d}; a pretrained model cannot generate for a problem "
            "with a larger decision space than it was trained on"
        )
    if any(e.m != instance.m for e in library.entries):
        raise ValueError(f"instance has m={instance.m}, which differs from the library entries")
    schedule = check_schedule(library.t_steps, args.xi)
    multi = len(args.seed) > 1
    for seed in args.seed:
        ledger = FeLedger()
        result, profile = sample_pareto_set(
            library, instance, args.n_pop, xi_mode=args.xi, seed=seed, ledger=ledger,
            diagnostics=args.igd_profile is not None, ref_size=args.ref_size,
        )
        out_path = _seeded_path(args.out, seed, multi)
        write_points_csv(out_path, result)
        fes = ledger.get(PHASE_SAMPLING)
        if fes != args.n_pop * len(schedule):
            raise RuntimeError(
                f"budget accounting violated: {fes} evaluations booked, "
                f"expected {args.n_pop * len(schedule)}"
            )
        print(f"wrote {out_path} ({len(result.decisions)} non-dominated points, "
              f"sampling function evaluations: {fes})")
        if profile is not None:
            profile_path = _seeded_path(args.igd_profile, seed, multi)
            write_profile_csv(profile_path, profile)
            print(f"wrote {profile_path} ({len(profile)} steps, diagnostics-exempt)")
            if not args.no_plot:
                fig_path = profile_path.with_suffix(".png")
                plot_igd_profile(fig_path, profile, f"{instance.id}: IGD per reverse step (seed {seed})")
                print(f"wrote {fig_path}")
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    if len(args.index) != 1:
        raise ValueError("evaluate expects exactly one --index")
    instance = make_problem(args.suite, args.index[0], args.m, args.d)
    reference = sample_reference_front(instance, args.ref_size)
    rows: list[tuple[str, object]] = [
        ("instance", instance.id),
        ("ref_size", args.ref_size),
        ("n_point_sets", len(args.points)),
    ]
    values = []
    sets = []
    for path in args.points:
        decisions, objectives = read_points_csv(path)
        if objectives.shape[1] != instance.m:
            raise ValueError(
                f"{path}: {objectives.shape[1]} objective columns, instance has m={instance.m}"
            )
        value = igd(reference, objectives)
        values.append(value)
        sets.append((Path(path).stem, objectives))
        rows.append((f"igd[{Path(path).name}]", value))
    rows.append(("igd_mean", float(np.mean(values))))
    rows.append(("igd_std", float(np.std(values))))
    if args.baseline_budget:
        pop = random_population(instance, args.baseline_budget, args.baseline_seed)
        pop = evaluate_pop(instance, pop, FeLedger(), phase="baseline")
        archive = nondominated_filter(pop.decisions, pop.objectives)
        base = igd(reference, archive.objectives)
        rows.append(("baseline_budget", args.baseline_budget))
        rows.append(("baseline_seed", args.baseline_seed))
        rows.append(("baseline_igd", base))
        sets.append((f"random baseline ({args.baseline_budget} evals)", archive.objectives))
    write_report_csv(args.out, rows)
    print(f"wrote {args.out}")
    for key, value in rows:
        print(f"  {key} = {value}")
    if not args.no_plot:
        fig_path = Path(args.out).with_suffix(".png")
        plot_front_comparison(fig_path, reference, sets, instance.id)
        print(f"wrote {fig_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="emodm",
        description="Learn evolutionary multi-objective search with a diffusion model "
        "and generate Pareto sets under a strict evaluation budget.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-trajectories", help="record NSGA-II runs as training data")
    _instance_args(p)
    p.add_argument("--n-pop", type=int, default=100)
    p.add_argument("--t-steps", type=int, default=200)
    p.add_argument("--seed", type=int, action="append", required=True,
                   help="master seed; repeat for several runs")
    p.add_argument("--out", required=True, help="output directory for run records")
    p.set_defaults(func=cmd_gen_trajectories)

    p = sub.add_parser("train", help="fit per-step noise models from recorded runs")
    p.add_argument("trajectories", nargs="+", help="run record files")
    p.add_argument("--no-attention", action="store_true",
                   help="store uniform attention weights (ablation variant)")
    p.add_argument("--out", required=True, help="model library file")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sample", help="generate a Pareto set for a new problem")
    _instance_args(p)
    p.add_argument("--lib", required=True, help="model library file")
    p.add_argument("--n-pop", type=int, default=100)
    p.add_argument("--xi", choices=list(XI_MODES), default="log2",
                   help="similarity-check schedule (controls the evaluation budget)")
    p.add_argument("--seed", type=int, action="append", required=True)
    p.add_argument("--out", required=True, help="points file (x1..xd,f1..fm)")
    p.add_argument("--igd-profile", default=None,
                   help="also write a per-step IGD profile here (diagnostics-exempt)")
    p.add_argument("--ref-size", type=int, default=1000)
    p.add_argument("--no-plot", action="store_true", help="skip figure rendering")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("evaluate", help="report IGD of point sets against the analytic front")
    _instance_args(p)
    p.add_argument("--points", action="append", required=True, help="points file; repeatable")
    p.add_argument("--ref-size", type=int, default=1000)
    p.add_argument("--baseline-budget", type=int, default=0,
                   help="also report a random-population baseline with this many evaluations")
    p.add_argument("--baseline-seed", type=int, default=0)
    p.add_argument("--out", required=True, help="report file")
    p.add_argument("--no-plot", action="store_true", help="skip figure rendering")
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
