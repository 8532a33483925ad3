"""Experiment orchestration: resolved run configs, single cells, sweeps,
and the three reference comparison grids.

A *cell* is one (dataset, loss configuration, seed) training run followed
by sampling and evaluation. Sweeps fan cells out over a process pool
bounded by the CPU count (override with the HOMOFLOW_THREADS environment
variable); every cell owns its RNG streams, so parallel order never
affects results.

Per-cell RNG protocol (master = Rng(seed)): the training loop consumes
splits 1-2 (model init, batch stream), then split 3 seeds the sampler's
source starting points, split 4 the fresh evaluation target cloud, and
split 5 the displayed source/target clouds of the scatter plot.
"""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from statistics import median

from .datasets import DatasetSpec, get_experiment, sample_cloud, sample_dataset, PointCloud
from .io import (
    cloud_to_csv,
    ensure_dir,
    history_to_csv,
    save_checkpoint,
    trajectory_to_csv,
    write_json,
)
from .losses import ConfigError, LossConfig
from .metrics import MetricReport, count_params, estimate_flops, euclidean_distance_loss
from .rng import Rng
from .sampling import SamplerConfig, sample
from .schedule import Schedule
from .svgplot import emit_scatter_svg
from .training import TrainRun, train

DEFAULT_SAMPLER_STEPS = 128

DEFAULT_CONFIG = {
    "dataset": "eight_mode",
    "losses": "M1+M2+SC",
    "schedule": {"kind": "vp", "a": 19.9, "b": 0.1},
    "seed": 0,
    "batch_size": None,
    "learning_rate": None,
    "steps": None,
    "true_target_fraction": 0.75,
    "reduction": "sum",
    "hidden_sizes": [100, 100],
    "activation": "tanh",
    "sampler": {"steps": DEFAULT_SAMPLER_STEPS, "order": None},
    "out": "runs/run",
}


@dataclass
class CellConfig:
    """A fully resolved cell, ready to run."""

    dataset_name: str
    dataset: DatasetSpec
    losses: LossConfig
    schedule: Schedule
    seed: int
    batch_size: int
    learning_rate: float
    steps: int
    hidden_sizes: tuple
    activation: str
    reduction: str
    sampler_steps: int
    sampler_order: int | None
    out: str | None


def _expect(doc: dict, key: str, types, path: str):
    if key not in doc:
        raise ConfigError(f"missing config key '{path}{key}'")
    val = doc[key]
    if not isinstance(val, types):
        raise ConfigError(
            f"config key '{path}{key}' has type {type(val).__name__}, "
            f"expected {'/'.join(t.__name__ for t in types)}"
        )
    return val


def resolve_config(doc: dict) -> CellConfig:
    """Merge a (partial) config document over the defaults and validate."""
    merged = json.loads(json.dumps(DEFAULT_CONFIG))
    for key, val in doc.items():
        if key not in DEFAULT_CONFIG:
            raise ConfigError(f"unknown config key '{key}'")
        if isinstance(DEFAULT_CONFIG[key], dict) and isinstance(val, dict):
            for sub, sval in val.items():
                if sub not in DEFAULT_CONFIG[key]:
                    raise ConfigError(f"unknown config key '{key}.{sub}'")
                merged[key][sub] = sval
        else:
            merged[key] = val

    dataset_val = merged["dataset"]
    if isinstance(dataset_val, str):
        exp = get_experiment(dataset_val)
        dataset_name, dataset = exp.name, exp.dataset
    elif isinstance(dataset_val, dict):
        kind = _expect(dataset_val, "kind", (str,), "dataset.")
        try:
            dataset = DatasetSpec(**dataset_val)
        except TypeError as exc:
            raise ConfigError(f"bad inline dataset spec: {exc}") from None
        dataset_name, exp = kind, None
    else:
        raise ConfigError("config key 'dataset' must be a name or an inline spec object")

    losses_label = _expect(merged, "losses", (str,), "")
    cfg = LossConfig.from_label(
        losses_label,
        true_target_fraction=float(_expect(merged, "true_target_fraction", (int, float), "")),
    )
    sched_doc = _expect(merged, "schedule", (dict,), "")
    kind = _expect(sched_doc, "kind", (str,), "schedule.")
    try:
        schedule = Schedule(kind, float(sched_doc.get("a", 19.9)), float(sched_doc.get("b", 0.1)))
    except ValueError as exc:
        raise ConfigError(f"schedule.kind: {exc}") from None

    batch = merged["batch_size"]
    if batch is None:
        batch = exp.batch_size if exp else 800
    lr = merged["learning_rate"]
    if lr is None:
        lr = exp.learning_rate if exp else 0.005
    steps = merged["steps"]
    if steps is None:
        steps = exp.steps_for(cfg.label()) if exp else 1000

    sampler_doc = _expect(merged, "sampler", (dict,), "")
    sampler_steps = int(sampler_doc.get("steps") or DEFAULT_SAMPLER_STEPS)
    sampler_order = sampler_doc.get("order")
    if sampler_order is not None:
        sampler_order = int(sampler_order)
    reduction = _expect(merged, "reduction", (str,), "")
    if reduction not in ("mean", "sum"):
        raise ConfigError(f"config key 'reduction' must be 'mean' or 'sum', got {reduction!r}")

    return CellConfig(
        dataset_name=dataset_name,
        dataset=dataset,
        losses=cfg,
        schedule=schedule,
        seed=int(_expect(merged, "seed", (int,), "")),
        batch_size=int(batch),
        learning_rate=float(lr),
        steps=int(steps),
        hidden_sizes=tuple(int(h) for h in merged["hidden_sizes"]),
        activation=str(merged["activation"]),
        reduction=reduction,
        sampler_steps=sampler_steps,
        sampler_order=sampler_order,
        out=merged["out"],
    )


def run_cell(cell: CellConfig, write_artifacts: bool = True) -> MetricReport:
    """Train, sample, evaluate; optionally write the artifact set."""
    started = time.time()
    master = Rng(cell.seed)
    run = TrainRun(
        dataset=cell.dataset,
        schedule=cell.schedule,
        losses=cell.losses,
        learning_rate=cell.learning_rate,
        batch_size=cell.batch_size,
        steps=cell.steps,
        seed=cell.seed,
        hidden_sizes=cell.hidden_sizes,
        activation=cell.activation,
        reduction=cell.reduction,
    )
    result = train(run, rng=master)

    n = cell.dataset.cloud_size()
    x_init = sample_cloud(cell.dataset, master.split(), "source", n)
    sampler = SamplerConfig(steps=cell.sampler_steps, order=cell.sampler_order)
    traj = sample(result.fields, sampler, x_init)
    generated = PointCloud(traj[-1], "generated")
    eval_target = PointCloud(sample_cloud(cell.dataset, master.split(), "target", n), "target")
    display_src, display_tgt = sample_dataset(cell.dataset, master.split())

    report = MetricReport(
        dataset=cell.dataset_name,
        losses=cell.losses.label(),
        seed=cell.seed,
        euclidean_distance=euclidean_distance_loss(generated, eval_target),
        param_count=count_params(cell.losses, cell.hidden_sizes),
        flop_estimate=estimate_flops(cell.losses, cell.hidden_sizes, batch=cell.batch_size),
    )

    if write_artifacts and cell.out:
        out = ensure_dir(cell.out)
        save_checkpoint(out / "model.json", result.fields, cell.seed, cell.steps)
        history_to_csv(result.history, out / "loss.csv")
        cloud_to_csv(generated, out / "generated.csv")
        write_json(report.to_dict(), out / "metrics.json")
        emit_scatter_svg([display_src, display_tgt, generated], out / "scatter.svg")
        trajectory_to_csv(traj, out / "traj.csv")
        with open(out / "run.log", "a", encoding="utf-8") as fh:
            fh.write(
                f"started={started:.3f} elapsed={time.time() - started:.3f}s "
                f"dataset={cell.dataset_name} losses={cell.losses.label()} "
                f"seed={cell.seed} steps={cell.steps}\n"
            )
    return report


def worker_count(requested: int | None = None) -> int:
    cap = os.environ.get("HOMOFLOW_THREADS")
    limit = int(cap) if cap else (os.cpu_count() or 1)
    if requested is not None:
        limit = min(limit, requested)
    return max(limit, 1)


def _cell_task(args):
    cell, write = args
    report = run_cell(cell, write_artifacts=write)
    return report.to_dict()


def run_cells(cells: list[CellConfig], write_artifacts: bool = False,
              workers: int | None = None) -> list[dict]:
    """Run cells, in parallel when more than one worker is available."""
    n_workers = worker_count(workers)
    tasks = [(c, write_artifacts) for c in cells]
    if n_workers == 1 or len(cells) <= 1:
        return [_cell_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=n_workers) as pool:
        return list(pool.map(_cell_task, tasks))


# Published per-table metric values used only for rank-agreement summaries;
# absolute magnitudes are not comparable across metric definitions.
REFERENCE_VALUES = {
    "t1": {
        "datasets": ["four_mode", "five_mode", "eight_mode"],
        "configs": ["M1", "M2", "SC", "M1+M2", "M2+SC", "M1+SC", "M1+M2+SC"],
        "values": {
            "four_mode": {"M1": 2.759, "M2": 11.089, "SC": 6.761, "M1+M2": 0.941,
                          "M2+SC": 8.708, "M1+SC": 0.820, "M1+M2+SC": 0.809},
            "five_mode": {"M1": 3.281, "M2": 6.554, "SC": 10.893, "M1+M2": 1.097,
                          "M2+SC": 9.212, "M1+SC": 1.067, "M1+M2+SC": 0.917},
            "eight_mode": {"M1": 3.321, "M2": 10.830, "SC": 7.646, "M1+M2": 0.977,
                           "M2+SC": 4.801, "M1+SC": 1.084, "M1+M2+SC": 0.778},
        },
    },
    "t2": {
        "datasets": ["circle", "irregular_ring", "spiral", "spin"],
        "configs": ["M1+M2", "M1+SC", "M2+SC", "M1+M2+SC"],
        "values": {
            "circle": {"M1+M2": 0.642, "M1+SC": 0.736, "M2+SC": 7.233, "M1+M2+SC": 0.579},
            "irregular_ring": {"M1+M2": 0.731, "M1+SC": 0.743, "M2+SC": 0.975,
                               "M1+M2+SC": 0.678},
            "spiral": {"M1+M2": 7.233, "M1+SC": 3.289, "M2+SC": 10.096, "M1+M2+SC": 1.840},
            "spin": {"M1+M2": 31.009, "M1+SC": 12.055, "M2+SC": 50.499, "M1+M2+SC": 10.066},
        },
    },
    "t3": {
        "datasets": ["two_round_spin", "three_round_spin", "dot_circle"],
        "configs": ["SC", "M1+SC", "M1+M2+SC", "M1+M2+M3+SC"],
        "values": {
            "two_round_spin": {"SC": 59.490, "M1+SC": 17.866, "M1+M2+SC": 9.417,
                               "M1+M2+M3+SC": 7.440},
            "three_round_spin": {"SC": 50.981, "M1+SC": 23.606, "M1+M2+SC": 13.085,
                                 "M1+M2+M3+SC": 10.679},
            "dot_circle": {"SC": 89.974, "M1+SC": 37.550, "M1+M2+SC": 30.679,
                           "M1+M2+M3+SC": 26.819},
        },
    },
}


def _ranking(values: dict) -> list[str]:
    return sorted(values, key=lambda k: values[k])


def reproduce_table(table_id: str, seeds=(0, 1, 2, 3, 4), out_dir=None,
                    sampler_steps: int | None = None, steps_override: int | None = None,
                    workers: int | None = None) -> dict:
    """Run a full comparison grid and summarize rank agreement.

    Returns {"cells": per-seed reports, "medians": ..., "agreement": ...};
    also renders a plain-text table when out_dir is given.
    """
    if table_id not in REFERENCE_VALUES:
        raise ConfigError(f"table id must be one of {sorted(REFERENCE_VALUES)}, got {table_id!r}")
    ref = REFERENCE_VALUES[table_id]
    cells = []
    for ds in ref["datasets"]:
        for label in ref["configs"]:
            for seed in seeds:
                doc = {"dataset": ds, "losses": label, "seed": int(seed), "out": None}
                if sampler_steps is not None:
                    doc["sampler"] = {"steps": int(sampler_steps)}
                if steps_override is not None:
                    doc["steps"] = int(steps_override)
                cells.append(resolve_config(doc))
    reports = run_cells(cells, write_artifacts=False, workers=workers)

    medians: dict[str, dict[str, float]] = {ds: {} for ds in ref["datasets"]}
    per_seed: dict[str, dict[str, list]] = {ds: {} for ds in ref["datasets"]}
    for ds in ref["datasets"]:
        for label in ref["configs"]:
            vals = [r["euclidean_distance"] for r in reports
                    if r["dataset"] == ds and r["losses"] == label]
            per_seed[ds][label] = vals
            medians[ds][label] = median(vals)

    agreement = {}
    for ds in ref["datasets"]:
        ours = _ranking(medians[ds])
        theirs = _ranking(ref["values"][ds])
        pairs = agreeing = 0
        for i in range(len(theirs)):
            for j in range(i + 1, len(theirs)):
                a, b = theirs[i], theirs[j]
                pairs += 1
                if (medians[ds][a] < medians[ds][b]) == (
                    ref["values"][ds][a] < ref["values"][ds][b]
                ):
                    agreeing += 1
        agreement[ds] = {
            "our_order": ours,
            "reference_order": theirs,
            "best_matches": ours[0] == theirs[0],
            "pairwise_agreement": agreeing / pairs,
        }

    summary = {
        "table": table_id,
        "seeds": list(seeds),
        "medians": medians,
        "per_seed": per_seed,
        "agreement": agreement,
        "cells": reports,
    }
    if out_dir is not None:
        out = ensure_dir(out_dir)
        write_json(summary, out / f"{table_id}_results.json")
        (out / f"{table_id}_table.txt").write_text(render_table(table_id, summary))
    return summary


def render_table(table_id: str, summary: dict) -> str:
    """Side-by-side text table: our medians vs. reference values."""
    ref = REFERENCE_VALUES[table_id]
    width = max(len(c) for c in ref["configs"]) + 2
    colw = 22
    lines = [f"Table {table_id}: euclidean distance (ours | reference)"]
    header = " " * width + "".join(ds.ljust(colw) for ds in ref["datasets"])
    lines.append(header)
    for label in ref["configs"]:
        row = label.ljust(width)
        for ds in ref["datasets"]:
            ours = summary["medians"][ds][label]
            theirs = ref["values"][ds][label]
            row += f"{ours:8.3f} | {theirs:8.3f}   ".ljust(colw)
        lines.append(row)
    lines.append("")
    for ds, agr in summary["agreement"].items():
        lines.append(
            f"{ds}: best-config match = {agr['best_matches']}, "
            f"pairwise rank agreement = {agr['pairwise_agreement']:.2f}"
        )
        lines.append(f"  ours:      {' < '.join(agr['our_order'])}")
        lines.append(f"  reference: {' < '.join(agr['reference_order'])}")
    return "\n".join(lines) + "\n"
