"""File formats: run records, model libraries, point sets, profiles, reports.

Run records are line-delimited JSON (one generation per line) so that long
runs stream instead of loading as one document. Model libraries are a single
JSON document. All floats go through Python's repr rendering, which
round-trips exactly, and every writer emits keys in a fixed order, so
rewriting the same data yields byte-identical files.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .attention import AttentionWeights
from .diffusion import AffineTransform, NoiseModel, PretrainedLibrary, StepModel
from .moea import EvolutionaryTrajectory
from .problems import SPACE_RAW, MopInstance, Population, make_problem

FORMAT_VERSION = "0.1.0"


def _listify(a: np.ndarray) -> list:
    return np.asarray(a, dtype=float).tolist()


def sha256_of(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


# ---------------------------------------------------------------------------
# Run records (trajectories)


def write_trajectory(
    path: str | Path,
    trajectory: EvolutionaryTrajectory,
    instance: MopInstance,
    seed: int,
) -> None:
    header = {
        "kind": "trajectory",
        "version": FORMAT_VERSION,
        "problem_id": trajectory.problem_id,
        "suite": instance.suite,
        "index": instance.index,
        "m": trajectory.m,
        "d": trajectory.d,
        "n_pop": trajectory.n_pop,
        "t_steps": trajectory.t_steps,
        "seed": seed,
        "lower": _listify(instance.lower),
        "upper": _listify(instance.upper),
    }
    with open(path, "w") as f:
        f.write(json.dumps(header) + "\n")
        for gen, pop in enumerate(trajectory.generations):
            record = {
                "gen": gen,
                "decisions": _listify(pop.decisions),
                "objectives": _listify(pop.objectives),
            }
            f.write(json.dumps(record) + "\n")


def read_trajectory(path: str | Path) -> tuple[EvolutionaryTrajectory, MopInstance, int]:
    with open(path) as f:
        header = json.loads(f.readline())
        if header.get("kind") != "trajectory":
            raise ValueError(f"{path}: not a trajectory file")
        generations = []
        for line in f:
            rec = json.loads(line)
            generations.append(
                Population(
                    step=rec["gen"],
                    decisions=np.asarray(rec["decisions"]),
                    objectives=np.asarray(rec["objectives"]),
                    space_tag=SPACE_RAW,
                )
            )
    trajectory = EvolutionaryTrajectory(
        problem_id=header["problem_id"],
        n_pop=header["n_pop"],
        t_steps=header["t_steps"],
        m=header["m"],
        d=header["d"],
        generations=generations,
    )
    instance = make_problem(header["suite"], header["index"], header["m"], header["d"])
    return trajectory, instance, header["seed"]


# ---------------------------------------------------------------------------
# Model libraries


def _step_to_dict(s: StepModel) -> dict:
    return {
        "t": s.t,
        "alpha": s.alpha,
        "alpha_bar": s.alpha_bar,
        "noise_mean": _listify(s.noise_mean),
        "noise_var": _listify(s.noise_var),
        "prompt_mean": _listify(s.prompt_mean),
        "prompt_var": _listify(s.prompt_var),
        "prev_mean": _listify(s.prev_mean),
        "prev_var": _listify(s.prev_var),
        "w": _listify(s.attention.w),
        "avg_nmi": _listify(s.attention.avg_nmi),
        "signature": s.signature,
    }


def _step_from_dict(d: dict) -> StepModel:
    att = AttentionWeights(
        step=d["t"],
        w=np.asarray(d["w"]),
        avg_nmi=np.asarray(d["avg_nmi"]),
        signature=d["signature"],
    )
    return StepModel(
        t=d["t"],
        alpha=d["alpha"],
        alpha_bar=d["alpha_bar"],
        noise_mean=np.asarray(d["noise_mean"]),
        noise_var=np.asarray(d["noise_var"]),
        prompt_mean=np.asarray(d["prompt_mean"]),
        prompt_var=np.asarray(d["prompt_var"]),
        prev_mean=np.asarray(d["prev_mean"]),
        prev_var=np.asarray(d["prev_var"]),
        attention=att,
        signature=d["signature"],
    )


def write_library(
    path: str | Path,
    library: PretrainedLibrary,
    input_files: list[str | Path] | None = None,
) -> None:
    inputs = []
    for p in input_files or []:
        inputs.append({"path": Path(p).name, "sha256": sha256_of(p)})
    doc = {
        "kind": "library",
        "version": FORMAT_VERSION,
        "t_steps": library.t_steps,
        "bins": library.bins,
        "use_attention": library.use_attention,
        "max_d": library.max_d,
        "inputs": inputs,
        "entries": [
            {
                "problem_id": e.problem_id,
                "d": e.d,
                "m": e.m,
                "n_pop": e.n_pop,
                "t_steps": e.t_steps,
                "training_loss": e.training_loss,
                "transform": {"offset": _listify(e.transform.offset), "scale": _listify(e.transform.scale)},
                "steps": [_step_to_dict(s) for s in e.steps],
            }
            for e in library.entries
        ],
    }
    with open(path, "w") as f:
        json.dump(doc, f)
        f.write("\n")


def read_library(path: str | Path) -> PretrainedLibrary:
    with open(path) as f:
        doc = json.load(f)
    if doc.get("kind") != "library":
        raise ValueError(f"{path}: not a model library file")
    entries = []
    for e in doc["entries"]:
        entries.append(
            NoiseModel(
                problem_id=e["problem_id"],
                d=e["d"],
                m=e["m"],
                n_pop=e["n_pop"],
                t_steps=e["t_steps"],
                transform=AffineTransform(
                    offset=np.asarray(e["transform"]["offset"]),
                    scale=np.asarray(e["transform"]["scale"]),
                ),
                steps=[_step_from_dict(s) for s in e["steps"]],
                training_loss=e["training_loss"],
            )
        )
    return PretrainedLibrary(
        entries=entries,
        t_steps=doc["t_steps"],
        bins=doc["bins"],
        use_attention=doc["use_attention"],
    )


# ---------------------------------------------------------------------------
# Delimited outputs


def _fmt(v: float) -> str:
    return repr(float(v))


def write_points_csv(path: str | Path, pop: Population) -> None:
    """Decision + objective matrix with header x1..xd,f1..fm."""
    if pop.objectives is None:
        raise ValueError("points file needs objectives")
    d, m = pop.d, pop.objectives.shape[1]
    header = [f"x{i + 1}" for i in range(d)] + [f"f{j + 1}" for j in range(m)]
    with open(path, "w") as f:
        f.write(",".join(header) + "\n")
        for row_x, row_f in zip(pop.decisions, pop.objectives):
            f.write(",".join(_fmt(v) for v in list(row_x) + list(row_f)) + "\n")


def read_points_csv(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """Returns (decisions, objectives) split on the x*/f* header columns."""
    with open(path) as f:
        header = f.readline().strip().split(",")
        n_x = sum(1 for h in header if h.startswith("x"))
        n_f = len(header) - n_x
        if n_f < 1:
            raise ValueError(f"{path}: no objective columns in header")
        rows = [list(map(float, line.strip().split(","))) for line in f if line.strip()]
    data = np.asarray(rows)
    return data[:, :n_x], data[:, n_x:]


def write_profile_csv(path: str | Path, profile: list[tuple[int, float]]) -> None:
    with open(path, "w") as f:
        f.write("step,igd\n")
        for step, value in profile:
            f.write(f"{step},{_fmt(value)}\n")


def write_report_csv(path: str | Path, rows: list[tuple[str, object]]) -> None:
    with open(path, "w") as f:
        f.write("metric,value\n")
        for key, value in rows:
            text = _fmt(value) if isinstance(value, float) else str(value)
            f.write(f"{key},{text}\n")
