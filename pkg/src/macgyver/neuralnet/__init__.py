"""Feed-forward networks, tied-weight twin models, training, persistence."""

from .dual import (
    JOINT_SHAPE_TRUNK_DIMS,
    MATERIAL_TRUNK_DIMS,
    DualNetworkModel,
    Embedding,
    build_dual_model,
    compute_embedding,
    dual_loss_and_grads,
    embedding_score,
    forward_trunk,
    pair_probabilities,
    pair_probability,
    train_dual,
)
from .network import (
    Adam,
    DenseLayer,
    DenseNetwork,
    TrainConfig,
    TrainingInfo,
    bce_loss,
    binary_loss_and_grads,
    fit_scaler,
    glorot_uniform,
    sigmoid,
    train_binary,
)
from .persist import load_model, save_model

__all__ = [
    "Adam",
    "DenseLayer",
    "DenseNetwork",
    "DualNetworkModel",
    "Embedding",
    "JOINT_SHAPE_TRUNK_DIMS",
    "MATERIAL_TRUNK_DIMS",
    "TrainConfig",
    "TrainingInfo",
    "bce_loss",
    "binary_loss_and_grads",
    "build_dual_model",
    "fit_scaler",
    "compute_embedding",
    "dual_loss_and_grads",
    "embedding_score",
    "forward_trunk",
    "glorot_uniform",
    "load_model",
    "pair_probabilities",
    "pair_probability",
    "save_model",
    "sigmoid",
    "train_binary",
    "train_dual",
]
