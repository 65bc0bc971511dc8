"""Tied-weight twin network with a sigmoid similarity head.

One trunk serves both inputs (weights tied by construction). The head
computes sigma(w . |f(x_i) - f(x_j)|^e + beta) with e = 1 for spectral
material models and e = 2 for joint shape models. After training, positive
examples are aggregated into a per-action embedding; queries are scored by
similarity to that embedding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateLabels, DimensionMismatch, EmptyPositives
from .network import (
    Adam,
    DenseNetwork,
    TrainConfig,
    TrainingInfo,
    bce_loss,
    fit_scaler,
    glorot_uniform,
    sigmoid,
)

MATERIAL_TRUNK_DIMS = (331, 426, 284, 128)
JOINT_SHAPE_TRUNK_DIMS = (640, 426, 284, 128)


@dataclass(frozen=True)
class Embedding:
    """Mean trunk output over an action's positive examples."""

    vector: np.ndarray
    action: str
    source_count: int

    def __post_init__(self):
        vec = np.asarray(self.vector, dtype=np.float64).reshape(-1)
        object.__setattr__(self, "vector", vec)
        if self.source_count < 1:
            raise ValueError("embedding needs at least one source sample")


class DualNetworkModel:
    def __init__(self, trunk: DenseNetwork, head_w: np.ndarray, head_beta: float,
                 metric_exponent: int = 1, embedding: Embedding | None = None,
                 training: TrainingInfo | None = None):
        if metric_exponent not in (1, 2):
            raise ValueError("metric_exponent must be 1 or 2")
        head_w = np.asarray(head_w, dtype=np.float64).reshape(-1)
        if head_w.shape[0] != trunk.output_dim:
            raise DimensionMismatch("head width must match trunk output dim")
        self.trunk = trunk
        self.head_w = head_w
        self.head_beta = float(head_beta)
        self.metric_exponent = metric_exponent
        self.embedding = embedding
        self.training = training

    @property
    def input_dim(self) -> int:
        return self.trunk.input_dim

    @property
    def output_dim(self) -> int:
        return self.trunk.output_dim

    def head_logit(self, feature_distance: np.ndarray) -> np.ndarray:
        return feature_distance @ self.head_w + self.head_beta


def forward_trunk(model: DualNetworkModel, x) -> np.ndarray:
    """Deterministic trunk output f(x); dropout is inference-disabled.

    Any input scaling fitted during training is applied by the trunk."""
    return model.trunk.forward(x)


def _metric(model: DualNetworkModel, delta: np.ndarray) -> np.ndarray:
    if model.metric_exponent == 1:
        return np.abs(delta)
    return delta * delta


def pair_probability(model: DualNetworkModel, x_i, x_j) -> float:
    """sigma(w . |f(x_i) - f(x_j)|^e + beta); symmetric in its inputs."""
    fi = forward_trunk(model, x_i)
    fj = forward_trunk(model, x_j)
    z = model.head_logit(_metric(model, fi - fj))
    return float(sigmoid(z))


def pair_probabilities(model: DualNetworkModel, first, second) -> np.ndarray:
    fi = forward_trunk(model, np.asarray(first, dtype=np.float64))
    fj = forward_trunk(model, np.asarray(second, dtype=np.float64))
    return sigmoid(model.head_logit(_metric(model, fi - fj)))


def compute_embedding(model: DualNetworkModel, positives, action: str = "") -> Embedding:
    """Average trunk output over the positive example vectors."""
    positives = np.asarray(positives, dtype=np.float64)
    if positives.ndim == 1:
        positives = positives[None, :]
    if positives.shape[0] == 0:
        raise EmptyPositives("no positive examples supplied")
    outputs = forward_trunk(model, positives)
    return Embedding(outputs.mean(axis=0), action, positives.shape[0])


def embedding_score(model: DualNetworkModel, embedding: Embedding, x) -> float:
    """Similarity of a query input to the aggregated embedding, in (0, 1)."""
    fx = forward_trunk(model, x)
    if fx.shape != embedding.vector.shape:
        raise DimensionMismatch("embedding and trunk output dims differ")
    z = model.head_logit(_metric(model, embedding.vector - fx))
    return float(sigmoid(z))


def _as_pair_arrays(pairs):
    firsts, seconds, labels = [], [], []
    for pair in pairs:
        if hasattr(pair, "first"):
            a, b, y = pair.first.values, pair.second.values, pair.label
        else:
            a, b, y = pair
            a = a.values if hasattr(a, "values") else a
            b = b.values if hasattr(b, "values") else b
        firsts.append(np.asarray(a, dtype=np.float64))
        seconds.append(np.asarray(b, dtype=np.float64))
        labels.append(int(y))
    return np.asarray(firsts), np.asarray(seconds), np.asarray(labels, dtype=np.float64)


def dual_loss_and_grads(model: DualNetworkModel, x_i, x_j, y, l2: float,
                        rng: np.random.Generator | None = None):
    """Regularized BCE over a pair batch plus gradients for all parameters.

    Parameter order: trunk layers (W, b)..., head w, head beta. With
    rng=None dropout is disabled and the loss is deterministic, which is
    what the finite-difference gradient checks need.
    """
    Xi = np.atleast_2d(np.asarray(x_i, dtype=np.float64))
    Xj = np.atleast_2d(np.asarray(x_j, dtype=np.float64))
    yv = np.asarray(y, dtype=np.float64).reshape(-1)

    if rng is None:
        saved = [layer.dropout for layer in model.trunk.layers]
        for layer in model.trunk.layers:
            layer.dropout = 0.0
        try:
            return dual_loss_and_grads(model, Xi, Xj, yv, l2,
                                       np.random.Generator(np.random.PCG64(0)))
        finally:
            for layer, d in zip(model.trunk.layers, saved):
                layer.dropout = d

    fi, cache_i = model.trunk.forward_train(Xi, rng)
    fj, cache_j = model.trunk.forward_train(Xj, rng)
    delta = fi - fj
    dvec = _metric(model, delta)
    z = dvec @ model.head_w + model.head_beta
    p = sigmoid(z)
    w = model.head_w
    loss = bce_loss(p, yv) + l2 * float(w @ w)

    n = yv.shape[0]
    dz = (p - yv) / n
    grad_w = dvec.T @ dz + 2.0 * l2 * w
    grad_beta = np.asarray(dz.sum())
    ddvec = dz[:, None] * w[None, :]
    if model.metric_exponent == 1:
        ddelta = ddvec * np.sign(delta)
    else:
        ddelta = ddvec * 2.0 * delta
    grads_i, _ = model.trunk.backward(cache_i, ddelta)
    grads_j, _ = model.trunk.backward(cache_j, -ddelta)

    flat = []
    for (gWi, gbi), (gWj, gbj) in zip(grads_i, grads_j):
        flat.extend((gWi + gWj, gbi + gbj))
    flat.extend((grad_w, grad_beta))
    return loss, flat


def build_dual_model(input_dim: int, hidden_dims, activation: str,
                     dropout: float, metric_exponent: int,
                     rng: np.random.Generator) -> DualNetworkModel:
    dims = [input_dim, *hidden_dims]
    activations = [activation] * len(hidden_dims)
    dropouts = [dropout] * len(hidden_dims)
    trunk = DenseNetwork.build(dims, activations, dropouts, rng)
    head_w = glorot_uniform(rng, dims[-1], 1)[:, 0]
    return DualNetworkModel(trunk, head_w, 0.0, metric_exponent)


def train_dual(pairs, config: TrainConfig | None = None, metric_exponent: int = 1,
               hidden_dims=(426, 284, 128), activation: str = "tanh") -> DualNetworkModel:
    """Train the twin network on labeled pairs; deterministic per seed."""
    config = config or TrainConfig()
    Xi, Xj, y = _as_pair_arrays(pairs)
    if Xi.shape[0] == 0:
        raise DegenerateLabels("no training pairs supplied")
    if np.unique(y).size < 2:
        raise DegenerateLabels("need both positive and negative pairs")

    scaler = fit_scaler(np.vstack([Xi, Xj])) if config.standardize else None
    if scaler is not None:
        Xi = (Xi - scaler[0]) / scaler[1]
        Xj = (Xj - scaler[0]) / scaler[1]

    rng = np.random.Generator(np.random.PCG64(config.seed))
    model = build_dual_model(Xi.shape[1], hidden_dims, activation,
                             config.dropout, metric_exponent, rng)
    params = [*model.trunk.parameters(), model.head_w,
              np.asarray(model.head_beta, dtype=np.float64)]
    opt = Adam(params, config.learning_rate)
    info = TrainingInfo(config.seed, config.learning_rate, config.l2, config.epochs)

    n = Xi.shape[0]
    beta_arr = params[-1]
    for _ in range(config.epochs):
        order = rng.permutation(n)
        losses = []
        for start in range(0, n, config.batch_size):
            sel = order[start:start + config.batch_size]
            model.head_beta = float(beta_arr)
            loss, grads = dual_loss_and_grads(model, Xi[sel], Xj[sel], y[sel],
                                              config.l2, rng)
            opt.step(grads)
            losses.append(loss)
        info.epoch_losses.append(float(np.mean(losses)))
    model.head_beta = float(beta_arr)
    if scaler is not None:
        model.trunk.input_mean, model.trunk.input_scale = scaler
    model.training = info
    return model
