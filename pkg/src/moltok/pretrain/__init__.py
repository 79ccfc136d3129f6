"""Self-supervised and contrastive pre-training for the hierarchical encoder."""

from .heads import Heads, init_heads
from .losses import (
    LossReport,
    LossWeights,
    derangement,
    loss_atom_type,
    loss_bond_type,
    loss_contrastive,
    loss_counts,
    loss_link,
    total_loss,
)
from .targets import N_ATOM_CLASSES, N_BOND_CLASSES, SslTargets, build_targets
from .train import (
    Adam,
    Sample,
    TrainConfig,
    TrainResult,
    batch_loss_t,
    grad,
    make_samples,
    masked_atom_accuracy,
    train,
)

__all__ = [
    "Adam",
    "Heads",
    "LossReport",
    "LossWeights",
    "N_ATOM_CLASSES",
    "N_BOND_CLASSES",
    "Sample",
    "SslTargets",
    "TrainConfig",
    "TrainResult",
    "batch_loss_t",
    "build_targets",
    "derangement",
    "grad",
    "init_heads",
    "loss_atom_type",
    "loss_bond_type",
    "loss_contrastive",
    "loss_counts",
    "loss_link",
    "make_samples",
    "masked_atom_accuracy",
    "total_loss",
    "train",
]
