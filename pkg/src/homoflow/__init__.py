"""High-order shortcut flow matching on 2-D distribution transport.

Field networks predict velocity, acceleration, and jerk along an
interpolation path between a source and a target distribution; samplers
integrate them with Taylor steps, including single-step generation via
step-size-conditioned (shortcut) training with a self-consistency
bootstrap.
"""

from . import backend
from .datasets import DatasetSpec, PointCloud, list_paper_experiments, sample_dataset
from .fields import FieldSet, init_fields
from .losses import LossConfig, STEP_SET, homo_loss, self_consistency_target
from .metrics import count_params, estimate_flops, euclidean_distance_loss
from .nn import AdamState, MlpModel, adam_init, adam_step, init_model, mlp_backward, mlp_forward
from .rng import Rng
from .sampling import SamplerConfig, homo_step, sample
from .schedule import PathPoint, Schedule, make_path_point, schedule_eval
from .training import TrainRun, train

__version__ = "0.1.0"

__all__ = [
    "AdamState", "DatasetSpec", "FieldSet", "LossConfig", "MlpModel",
    "PathPoint", "PointCloud", "Rng", "SamplerConfig", "Schedule", "STEP_SET",
    "TrainRun", "adam_init", "adam_step", "backend", "count_params",
    "estimate_flops", "euclidean_distance_loss", "homo_loss", "homo_step",
    "init_fields", "init_model", "list_paper_experiments", "make_path_point",
    "mlp_backward", "mlp_forward", "sample", "sample_dataset",
    "schedule_eval", "self_consistency_target", "train",
]
