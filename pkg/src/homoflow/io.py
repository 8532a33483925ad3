"""File formats: point-cloud CSV, trajectory CSV, loss history CSV, and the
versioned JSON checkpoint.

All floats in CSVs are written with 17 significant digits so parsing them
back reproduces the exact doubles. Checkpoints are JSON with keys sorted
alphabetically; numbers round-trip exactly (shortest-repr serialization),
so load(save(x)) is bit-identical.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .datasets import PointCloud
from .fields import FieldSet
from .nn import model_from_dict, model_to_dict

CHECKPOINT_VERSION = 1


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def cloud_to_csv(cloud: PointCloud, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "y", "label"])
        for x, y in cloud.points:
            writer.writerow([fmt(x), fmt(y), cloud.label])


def clouds_to_csv(clouds, path) -> None:
    """Several clouds in one file (same x,y,label layout)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "y", "label"])
        for cloud in clouds:
            for x, y in cloud.points:
                writer.writerow([fmt(x), fmt(y), cloud.label])


def cloud_from_csv(path) -> list[PointCloud]:
    groups: dict[str, list] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            groups.setdefault(row["label"], []).append((float(row["x"]), float(row["y"])))
    return [PointCloud(np.array(pts), label) for label, pts in groups.items()]


def trajectory_to_csv(traj: np.ndarray, path) -> None:
    """traj is (steps+1, n, 2); rows are point_id, step, t, x, y."""
    steps = traj.shape[0] - 1
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["point_id", "step", "t", "x", "y"])
        for pid in range(traj.shape[1]):
            for k in range(steps + 1):
                x, y = traj[k, pid]
                writer.writerow([pid, k, fmt(k / steps), fmt(x), fmt(y)])


def history_to_csv(history, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "total", "m1", "m2", "m3", "sc"])
        for step, total, m1, m2, m3, sc in history:
            writer.writerow([step, fmt(total), fmt(m1), fmt(m2), fmt(m3), fmt(sc)])


def write_json(doc: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def save_checkpoint(path, fields: FieldSet, rng_seed: int, step_count: int) -> None:
    doc = {
        "format_version": CHECKPOINT_VERSION,
        "step_conditioned": fields.step_conditioned,
        "rng_seed": rng_seed,
        "step_count": step_count,
        "models": {name: model_to_dict(m) for name, m in fields.models.items()},
    }
    write_json(doc, path)


def load_checkpoint(path) -> tuple[FieldSet, dict]:
    doc = read_json(path)
    version = doc.get("format_version")
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {version!r}")
    models = {name: model_from_dict(m) for name, m in doc["models"].items()}
    fields = FieldSet(
        u1=models["u1"], u2=models.get("u2"), u3=models.get("u3"),
        step_conditioned=bool(doc["step_conditioned"]),
    )
    meta = {"rng_seed": doc["rng_seed"], "step_count": doc["step_count"]}
    return fields, meta


def ensure_dir(path) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p
