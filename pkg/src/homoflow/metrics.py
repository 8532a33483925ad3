"""Cloud-distance metric and parameter/FLOP accounting.

The distribution metric is the symmetric mean nearest-neighbor distance

    0.5 * (mean_g min_t |g - t|  +  mean_t min_g |t - g|)

computed by exact brute force (clouds here stay in the low thousands).
It is zero exactly when the clouds coincide as multisets and is measured
in the data's own units, so values are comparable across loss
configurations on the same dataset.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np

from .fields import input_widths
from .losses import LossConfig


def _points(cloud) -> np.ndarray:
    pts = getattr(cloud, "points", cloud)
    pts = np.asarray(pts, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) == 0:
        raise ValueError(f"need a non-empty (n, 2) cloud, got shape {pts.shape}")
    return pts


def euclidean_distance_loss(generated, target) -> float:
    """Symmetric mean nearest-neighbor distance between two clouds."""
    a = _points(generated)
    b = _points(target)
    d2 = ((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=2)
    d = np.sqrt(d2)
    return 0.5 * (d.min(axis=1).mean() + d.min(axis=0).mean())


def active_networks(cfg: LossConfig) -> list[tuple[str, int]]:
    """(name, input width) of each network the configuration instantiates."""
    widths = input_widths(cfg.required_order, cfg.step_conditioned)
    return [(f"u{k + 1}", w) for k, w in enumerate(widths)]


def _layer_sizes(in_dim: int, hidden_sizes, out_dim: int = 2):
    return (in_dim, *hidden_sizes, out_dim)


def count_params(cfg: LossConfig, hidden_sizes=(100, 100), out_dim: int = 2) -> int:
    """Total parameters across the configuration's networks."""
    total = 0
    for _, width in active_networks(cfg):
        sizes = _layer_sizes(width, hidden_sizes, out_dim)
        total += sum(i * o + o for i, o in zip(sizes[:-1], sizes[1:]))
    return total


def estimate_flops(cfg: LossConfig, hidden_sizes=(100, 100), out_dim: int = 2,
                   batch: int = 1) -> int:
    """Multiply-accumulate FLOPs (2 per product) of one forward pass of
    every active network, scaled by batch size. A coarse, documented
    estimate rather than a profiled count."""
    total = 0
    for _, width in active_networks(cfg):
        sizes = _layer_sizes(width, hidden_sizes, out_dim)
        total += sum(2 * i * o for i, o in zip(sizes[:-1], sizes[1:]))
    return batch * total


@dataclass(frozen=True)
class MetricReport:
    dataset: str
    losses: str
    seed: int
    euclidean_distance: float
    param_count: int
    flop_estimate: int

    def to_dict(self) -> dict:
        return asdict(self)
