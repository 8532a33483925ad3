"""Seeded 2-D source/target distribution pairs.

Each dataset is a pair of point clouds: the source cloud where sampling
starts and the target cloud the model should generate. Draw order is part
of the reproducibility contract: ``sample_dataset`` splits its RNG once
for the source cloud and once for the target cloud (in that order), and
each shape generator documents its own consumption order.

Shape parameterizations (ring radii, spiral constants) beyond the
Gaussian-mixture recipes are not pinned by any external reference; the
defaults below are the documented choices and every constant can be
overridden on the spec.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .rng import Rng

DATASET_KINDS = (
    "gaussian_modes",
    "circle",
    "irregular_ring",
    "spiral",
    "spin",
    "round_spin",
    "dot_circle",
)


@dataclass(frozen=True)
class PointCloud:
    points: np.ndarray
    label: str  # source | target | generated

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) == 0:
            raise ValueError(f"point cloud must be a non-empty (n, 2) array, got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("point cloud contains non-finite coordinates")
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True)
class DatasetSpec:
    kind: str
    mode_count: int = 8
    src_radius: float = 6.0
    tgt_radius: float = 13.0
    variance: float = 0.3
    points_per_mode: int = 100
    total_points: int = 600
    rounds: int = 1
    ring_amplitude: float = 0.25   # irregular ring modulation depth
    spiral_r0: float = 1.0         # spiral radius at angle 0
    spiral_r1: float = 12.0        # spiral radius at the final angle
    dot_points: int = 300          # dot_circle: center-dot share of the source

    def __post_init__(self):
        if self.kind not in DATASET_KINDS:
            raise ValueError(f"unknown dataset kind {self.kind!r}; known: {DATASET_KINDS}")
        if self.variance <= 0:
            raise ValueError(f"variance must be positive, got {self.variance}")
        if self.src_radius < 0 or self.tgt_radius < 0:
            raise ValueError("radii must be non-negative")
        if self.points_per_mode <= 0 or self.total_points <= 0 or self.mode_count <= 0:
            raise ValueError("point and mode counts must be positive")

    @property
    def sigma(self) -> float:
        return math.sqrt(self.variance)

    def cloud_size(self) -> int:
        """Points per cloud (source and target are the same size)."""
        if self.kind == "gaussian_modes":
            return self.mode_count * self.points_per_mode
        return self.total_points


def _gaussian_modes(rng: Rng, k: int, radius: float, sigma: float, per_mode: int) -> np.ndarray:
    """Mode 0 first; within a mode, one Box-Muller pair per point."""
    chunks = []
    for i in range(k):
        angle = 2.0 * math.pi * i / k
        center = np.array([radius * math.cos(angle), radius * math.sin(angle)])
        chunks.append(center + sigma * rng.points(per_mode))
    return np.concatenate(chunks, axis=0)


def _ring(rng: Rng, radius: float, sigma: float, n: int, amplitude: float = 0.0) -> np.ndarray:
    """Uniform angles (n uniforms) then radial offsets (n normals)."""
    theta = 2.0 * math.pi * rng.uniforms(n)
    base = radius * (1.0 + amplitude * np.sin(3.0 * theta))
    r = base + sigma * rng.normals(n)
    return np.stack([r * np.cos(theta), r * np.sin(theta)], axis=1)


def _spiral(rng: Rng, rounds: int, r0: float, r1: float, sigma: float, n: int) -> np.ndarray:
    """Uniform angles over [0, 2*pi*rounds] (n uniforms), then n radial normals."""
    span = 2.0 * math.pi * rounds
    theta = span * rng.uniforms(n)
    r = r0 + (r1 - r0) * theta / span + sigma * rng.normals(n)
    return np.stack([r * np.cos(theta), r * np.sin(theta)], axis=1)


def _dot(rng: Rng, sigma: float, n: int) -> np.ndarray:
    return sigma * rng.points(n)


def sample_dataset(spec: DatasetSpec, rng: Rng) -> tuple[PointCloud, PointCloud]:
    """Deterministic (source, target) clouds for the given spec and RNG."""
    src_rng = rng.split()
    tgt_rng = rng.split()
    s = spec.sigma
    n = spec.total_points
    if spec.kind == "gaussian_modes":
        src = _gaussian_modes(src_rng, spec.mode_count, spec.src_radius, s, spec.points_per_mode)
        tgt = _gaussian_modes(tgt_rng, spec.mode_count, spec.tgt_radius, s, spec.points_per_mode)
    elif spec.kind == "circle":
        src = _ring(src_rng, spec.src_radius, s, n)
        tgt = _ring(tgt_rng, spec.tgt_radius, s, n)
    elif spec.kind == "irregular_ring":
        src = _ring(src_rng, spec.src_radius, s, n)
        tgt = _ring(tgt_rng, spec.tgt_radius, s, n, amplitude=spec.ring_amplitude)
    elif spec.kind in ("spiral", "spin", "round_spin"):
        src = _ring(src_rng, spec.src_radius, s, n)
        tgt = _spiral(tgt_rng, spec.rounds, spec.spiral_r0, spec.spiral_r1, s, n)
    elif spec.kind == "dot_circle":
        # Source: dot first, then the outer ring; target: two-round spiral.
        k = spec.dot_points
        src = np.concatenate(
            [_dot(src_rng, s, k), _ring(src_rng, 10.0, s, n - k)], axis=0
        )
        tgt = _spiral(tgt_rng, 2, spec.spiral_r0, spec.spiral_r1, s, n)
    else:  # pragma: no cover - guarded by DatasetSpec
        raise ValueError(f"unknown dataset kind {spec.kind!r}")
    return PointCloud(src, "source"), PointCloud(tgt, "target")


def sample_cloud(spec: DatasetSpec, rng: Rng, which: str, n: int) -> np.ndarray:
    """Fresh draw of ``n`` points from one side of the dataset.

    Used for training batches and sampler starting points, where batch
    sizes routinely exceed the visualization cloud size. The draw follows
    the same generator as :func:`sample_dataset` with the count replaced.
    """
    if which not in ("source", "target"):
        raise ValueError(f"which must be 'source' or 'target', got {which!r}")
    s = spec.sigma
    if spec.kind == "gaussian_modes":
        per, extra = divmod(n, spec.mode_count)
        radius = spec.src_radius if which == "source" else spec.tgt_radius
        chunks = []
        for i in range(spec.mode_count):
            c = per + (1 if i < extra else 0)
            if c == 0:
                continue
            angle = 2.0 * math.pi * i / spec.mode_count
            center = np.array([radius * math.cos(angle), radius * math.sin(angle)])
            chunks.append(center + s * rng.points(c))
        return np.concatenate(chunks, axis=0)
    if which == "source":
        if spec.kind == "dot_circle":
            k = n // 2
            return np.concatenate([_dot(rng, s, k), _ring(rng, 10.0, s, n - k)], axis=0)
        return _ring(rng, spec.src_radius, s, n)
    if spec.kind == "circle":
        return _ring(rng, spec.tgt_radius, s, n)
    if spec.kind == "irregular_ring":
        return _ring(rng, spec.tgt_radius, s, n, amplitude=spec.ring_amplitude)
    if spec.kind == "dot_circle":
        return _spiral(rng, 2, spec.spiral_r0, spec.spiral_r1, s, n)
    return _spiral(rng, spec.rounds, spec.spiral_r0, spec.spiral_r1, s, n)


@dataclass(frozen=True)
class ExperimentSpec:
    """A named experiment: dataset recipe plus training hyperparameters."""

    name: str
    dataset: DatasetSpec
    batch_size: int
    learning_rate: float = 0.005
    steps_default: int = 1000
    steps_by_config: dict = field(default_factory=dict)

    def steps_for(self, loss_label: str) -> int:
        return self.steps_by_config.get(loss_label, self.steps_default)


def list_paper_experiments() -> list[ExperimentSpec]:
    """The named experiment grid with tabulated hyperparameters."""
    g = lambda k, rs, rt, ppm: DatasetSpec(
        "gaussian_modes", mode_count=k, src_radius=rs, tgt_radius=rt, points_per_mode=ppm
    )
    ablation_steps = {"M2": 100, "SC": 50, "M2+SC": 100}
    return [
        ExperimentSpec("four_mode", g(4, 5.0, 14.0, 200), 800,
                       steps_by_config={**ablation_steps, "M1+M2": 1000}),
        ExperimentSpec("five_mode", g(5, 6.0, 13.0, 200), 1000,
                       steps_by_config={**ablation_steps, "M1+M2": 2000}),
        ExperimentSpec("eight_mode", g(8, 6.0, 13.0, 100), 1600,
                       steps_by_config={**ablation_steps, "M1+M2": 2000}),
        ExperimentSpec("circle",
                       DatasetSpec("circle", src_radius=5.0, tgt_radius=12.0, total_points=400),
                       800, steps_by_config={"M2+SC": 100}),
        ExperimentSpec("irregular_ring",
                       DatasetSpec("irregular_ring", src_radius=5.0, tgt_radius=10.0,
                                   total_points=600),
                       1000, steps_by_config={"M2+SC": 100}),
        ExperimentSpec("spiral",
                       DatasetSpec("spiral", src_radius=5.0, total_points=300), 1600),
        ExperimentSpec("spin",
                       DatasetSpec("spin", src_radius=5.0, total_points=600), 1600),
        ExperimentSpec("two_round_spin",
                       DatasetSpec("round_spin", rounds=2, src_radius=5.0, total_points=400),
                       800, steps_by_config={"SC": 180}),
        ExperimentSpec("three_round_spin",
                       DatasetSpec("round_spin", rounds=3, src_radius=5.0, total_points=400),
                       1000, steps_default=2000, steps_by_config={"SC": 180}),
        ExperimentSpec("dot_circle",
                       DatasetSpec("dot_circle", total_points=600), 1600,
                       steps_default=10000, steps_by_config={"SC": 180}),
    ]


def get_experiment(name: str) -> ExperimentSpec:
    for exp in list_paper_experiments():
        if exp.name == name:
            return exp
    known = [e.name for e in list_paper_experiments()]
    raise KeyError(f"unknown experiment {name!r}; known: {known}")
