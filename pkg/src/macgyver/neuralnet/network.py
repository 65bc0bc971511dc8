"""Minimal dense-network stack: layers, Adam, and binary-classifier training.

Backpropagation is hand-written for the two fixed topologies this package
needs (similarity trunks and small binary classifiers). Dropout uses
inverted scaling at train time and is disabled at inference, so trained
networks are deterministic functions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DegenerateLabels, DimensionMismatch


def _relu(z):
    return np.maximum(z, 0.0)


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


# activation -> (forward, derivative expressed in terms of the activation output)
_ACTIVATIONS = {
    "tanh": (np.tanh, lambda a: 1.0 - a * a),
    "relu": (_relu, lambda a: (a > 0.0).astype(np.float64)),
    "sigmoid": (_sigmoid, lambda a: a * (1.0 - a)),
    "linear": (lambda z: z, lambda a: np.ones_like(a)),
}


def sigmoid(z):
    return _sigmoid(np.asarray(z, dtype=np.float64))


@dataclass
class TrainConfig:
    learning_rate: float = 0.001
    l2: float = 1e-4
    epochs: int = 20
    batch_size: int = 64
    dropout: float = 0.5
    seed: int = 0
    standardize: bool = True  # per-channel input scaling fitted on the training set

    def __post_init__(self):
        if self.learning_rate <= 0.0:
            raise ValueError("learning rate must be > 0")
        if self.l2 < 0.0:
            raise ValueError("l2 coefficient must be >= 0")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")


def fit_scaler(features: np.ndarray) -> tuple:
    """Per-channel mean/scale; near-constant channels get a floored scale."""
    mean = features.mean(axis=0)
    sd = features.std(axis=0)
    floor = max(1e-8, 0.05 * float(sd.mean()))
    return mean, np.maximum(sd, floor)


@dataclass
class TrainingInfo:
    seed: int
    lr: float
    l2: float
    epochs: int
    epoch_losses: list = field(default_factory=list)


@dataclass
class DenseLayer:
    weights: np.ndarray  # (fan_in, fan_out)
    bias: np.ndarray  # (fan_out,)
    activation: str
    dropout: float = 0.0

    def __post_init__(self):
        if self.activation not in _ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


class DenseNetwork:
    """Feed-forward stack of DenseLayers with chaining dimensions.

    When input_mean / input_scale are set (by a trainer that standardized
    its features), forward() rescales raw inputs first; the training-time
    passes work on pre-scaled arrays and never rescale.
    """

    def __init__(self, layers, input_mean=None, input_scale=None):
        layers = list(layers)
        if not layers:
            raise ValueError("network needs at least one layer")
        for prev, nxt in zip(layers, layers[1:]):
            if prev.weights.shape[1] != nxt.weights.shape[0]:
                raise DimensionMismatch(
                    f"layer dims do not chain: {prev.weights.shape} -> {nxt.weights.shape}"
                )
        self.layers = layers
        self.input_mean = input_mean
        self.input_scale = input_scale

    @property
    def input_dim(self) -> int:
        return self.layers[0].weights.shape[0]

    @property
    def output_dim(self) -> int:
        return self.layers[-1].weights.shape[1]

    @staticmethod
    def build(dims, activations, dropouts, rng: np.random.Generator) -> "DenseNetwork":
        layers = []
        for i in range(len(dims) - 1):
            layers.append(DenseLayer(
                weights=glorot_uniform(rng, dims[i], dims[i + 1]),
                bias=np.zeros(dims[i + 1]),
                activation=activations[i],
                dropout=dropouts[i],
            ))
        return DenseNetwork(layers)

    # -- forward / backward -------------------------------------------------

    def _check_input(self, x) -> tuple:
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        batch = x[None, :] if single else x
        if batch.ndim != 2 or batch.shape[1] != self.input_dim:
            raise DimensionMismatch(
                f"expected input dim {self.input_dim}, got shape {x.shape}"
            )
        return batch, single

    def forward(self, x) -> np.ndarray:
        """Inference pass: dropout disabled, deterministic."""
        batch, single = self._check_input(x)
        if self.input_mean is not None:
            batch = (batch - self.input_mean) / self.input_scale
        a = batch
        for layer in self.layers:
            fwd, _ = _ACTIVATIONS[layer.activation]
            a = fwd(a @ layer.weights + layer.bias)
        return a[0] if single else a

    def forward_train(self, x, rng: np.random.Generator):
        """Training pass with dropout; returns (output, caches for backward)."""
        batch, _ = self._check_input(x)
        a = batch
        caches = []
        for layer in self.layers:
            fwd, _ = _ACTIVATIONS[layer.activation]
            h = fwd(a @ layer.weights + layer.bias)
            if layer.dropout > 0.0:
                keep = 1.0 - layer.dropout
                mask = (rng.random(h.shape) < keep) / keep
                out = h * mask
            else:
                mask = None
                out = h
            caches.append((a, h, mask))
            a = out
        return a, caches

    def backward(self, caches, grad_output):
        """Gradients for a forward_train pass.

        Returns ([(dW, db) per layer], gradient w.r.t. the network input).
        """
        grad = np.asarray(grad_output, dtype=np.float64)
        param_grads = [None] * len(self.layers)
        for idx in range(len(self.layers) - 1, -1, -1):
            layer = self.layers[idx]
            a_in, h, mask = caches[idx]
            _, deriv = _ACTIVATIONS[layer.activation]
            dh = grad * mask if mask is not None else grad
            dz = dh * deriv(h)
            param_grads[idx] = (a_in.T @ dz, dz.sum(axis=0))
            grad = dz @ layer.weights.T
        return param_grads, grad

    def parameters(self) -> list:
        params = []
        for layer in self.layers:
            params.extend((layer.weights, layer.bias))
        return params


class Adam:
    """Adam over a list of parameter arrays, updated in place."""

    def __init__(self, params, learning_rate: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = list(params)
        self.lr = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = [np.zeros_like(p) for p in self.params]
        self.v = [np.zeros_like(p) for p in self.params]
        self.t = 0

    def step(self, grads) -> None:
        self.t += 1
        b1t = 1.0 - self.beta1 ** self.t
        b2t = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / b1t) / (np.sqrt(v / b2t) + self.eps)


def bce_loss(p: np.ndarray, y: np.ndarray) -> float:
    """Mean binary cross-entropy with clipped logs."""
    p = np.clip(p, 1e-12, 1.0 - 1e-12)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


def binary_loss_and_grads(net: DenseNetwork, features, labels, l2: float,
                          rng: np.random.Generator | None = None):
    """Loss and parameter gradients for a sigmoid-output classifier.

    L2 regularization applies to the output layer weights, mirroring the
    similarity head regularizer. With rng=None dropout is skipped, which
    keeps the loss a deterministic function for gradient checking.
    """
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64).reshape(-1)
    if rng is None:
        rng = np.random.Generator(np.random.PCG64(0))
        saved = [layer.dropout for layer in net.layers]
        for layer in net.layers:
            layer.dropout = 0.0
        try:
            return binary_loss_and_grads(net, X, y, l2, rng)
        finally:
            for layer, d in zip(net.layers, saved):
                layer.dropout = d

    out, caches = net.forward_train(X, rng)
    p = out[:, 0]
    w_out = net.layers[-1].weights
    loss = bce_loss(p, y) + l2 * float((w_out * w_out).sum())

    # stable BCE-through-sigmoid form: dL/dz_out = (p - y)/n
    dz = ((p - y) / len(y))[:, None]
    grads, _ = _backward_with_logit_grad(net, caches, dz)
    gW_out, gb_out = grads[-1]
    grads[-1] = (gW_out + 2.0 * l2 * w_out, gb_out)
    flat = []
    for gW, gb in grads:
        flat.extend((gW, gb))
    return loss, flat


def _backward_with_logit_grad(net: DenseNetwork, caches, dz_out):
    """Backward pass where dz_out is already dL/dz of the final layer."""
    grads = [None] * len(net.layers)
    a_in, h, mask = caches[-1]
    if mask is not None:
        raise ValueError("output layer must not use dropout")
    dz = dz_out
    grads[-1] = (a_in.T @ dz, dz.sum(axis=0))
    grad = dz @ net.layers[-1].weights.T
    for idx in range(len(net.layers) - 2, -1, -1):
        layer = net.layers[idx]
        a_in, h, mask = caches[idx]
        _, deriv = _ACTIVATIONS[layer.activation]
        dh = grad * mask if mask is not None else grad
        dz = dh * deriv(h)
        grads[idx] = (a_in.T @ dz, dz.sum(axis=0))
        grad = dz @ layer.weights.T
    return grads, grad


def train_binary(features, labels, hidden_dims=(256,), activation: str = "relu",
                 config: TrainConfig | None = None) -> DenseNetwork:
    """Train a sigmoid-output classifier; forward() yields confidence in (0,1)."""
    config = config or TrainConfig(dropout=0.0)
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64).reshape(-1)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise DimensionMismatch("features/labels shapes do not match")
    classes = np.unique(y)
    if classes.size < 2:
        raise DegenerateLabels("need both classes present")

    rng = np.random.Generator(np.random.PCG64(config.seed))
    scaler = fit_scaler(X) if config.standardize else None
    if scaler is not None:
        X = (X - scaler[0]) / scaler[1]
    dims = [X.shape[1], *hidden_dims, 1]
    activations = [activation] * len(hidden_dims) + ["sigmoid"]
    dropouts = [config.dropout] * len(hidden_dims) + [0.0]
    net = DenseNetwork.build(dims, activations, dropouts, rng)

    params = net.parameters()
    opt = Adam(params, config.learning_rate)
    info = TrainingInfo(config.seed, config.learning_rate, config.l2, config.epochs)
    n = X.shape[0]
    for _ in range(config.epochs):
        order = rng.permutation(n)
        losses = []
        for start in range(0, n, config.batch_size):
            sel = order[start:start + config.batch_size]
            loss, grads = binary_loss_and_grads(net, X[sel], y[sel], config.l2, rng)
            opt.step(grads)
            losses.append(loss)
        info.epoch_losses.append(float(np.mean(losses)))
    if scaler is not None:
        net.input_mean, net.input_scale = scaler
    net.training = info
    return net
