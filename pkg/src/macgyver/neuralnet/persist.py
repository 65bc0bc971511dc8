"""Lossless JSON persistence for trained networks.

Weights are stored as C99 hex-float strings so a save/load round trip is
bit-identical at double precision. Loading also accepts plain JSON numbers
for hand-written files.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import MissingModel
from .dual import DualNetworkModel, Embedding
from .network import DenseLayer, DenseNetwork, TrainingInfo

FORMAT_VERSION = 1


def _encode_array(arr: np.ndarray) -> list:
    return [float(v).hex() for v in np.asarray(arr, dtype=np.float64).reshape(-1)]


def _decode_value(v) -> float:
    return float.fromhex(v) if isinstance(v, str) else float(v)


def _decode_array(values, shape) -> np.ndarray:
    flat = np.asarray([_decode_value(v) for v in values], dtype=np.float64)
    return flat.reshape(shape)


def _layers_payload(net: DenseNetwork) -> list:
    payload = []
    for layer in net.layers:
        rows, cols = layer.weights.shape
        payload.append({
            "rows": rows,
            "cols": cols,
            "weights": _encode_array(layer.weights),
            "bias": _encode_array(layer.bias),
            "activation": layer.activation,
            "dropout": layer.dropout,
        })
    return payload


def _layers_from_payload(payload) -> DenseNetwork:
    layers = []
    for entry in payload:
        shape = (entry["rows"], entry["cols"])
        layers.append(DenseLayer(
            weights=_decode_array(entry["weights"], shape),
            bias=_decode_array(entry["bias"], (shape[1],)),
            activation=entry["activation"],
            dropout=float(entry["dropout"]),
        ))
    return DenseNetwork(layers)


def _training_payload(info: TrainingInfo | None):
    if info is None:
        return None
    return {"seed": info.seed, "lr": info.lr, "l2": info.l2, "epochs": info.epochs}


def _scaling_payload(net: DenseNetwork):
    if net.input_mean is None:
        return None
    return {"mean": _encode_array(net.input_mean),
            "scale": _encode_array(net.input_scale)}


def _apply_scaling_payload(net: DenseNetwork, payload) -> None:
    if payload is None:
        return
    dim = net.input_dim
    net.input_mean = _decode_array(payload["mean"], (dim,))
    net.input_scale = _decode_array(payload["scale"], (dim,))


def _training_from_payload(payload) -> TrainingInfo | None:
    if payload is None:
        return None
    return TrainingInfo(payload["seed"], payload["lr"], payload["l2"], payload["epochs"])


def save_model(model, path) -> None:
    """Persist a DualNetworkModel or DenseNetwork to JSON."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(model, DualNetworkModel):
        doc = {
            "format_version": FORMAT_VERSION,
            "kind": "dual",
            "input_dim": model.input_dim,
            "metric_exponent": model.metric_exponent,
            "layers": _layers_payload(model.trunk),
            "head": {
                "w": _encode_array(model.head_w),
                "beta": float(model.head_beta).hex(),
            },
            "input_scaling": _scaling_payload(model.trunk),
            "training": _training_payload(model.training),
        }
        if model.embedding is not None:
            doc["embedding"] = {
                "action": model.embedding.action,
                "values": _encode_array(model.embedding.vector),
                "count": model.embedding.source_count,
            }
    elif isinstance(model, DenseNetwork):
        doc = {
            "format_version": FORMAT_VERSION,
            "kind": "binary",
            "input_dim": model.input_dim,
            "layers": _layers_payload(model),
            "input_scaling": _scaling_payload(model),
            "training": _training_payload(getattr(model, "training", None)),
        }
    else:
        raise TypeError(f"cannot persist {type(model).__name__}")
    path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def load_model(path):
    """Load a model saved by save_model; returns the matching type."""
    path = Path(path)
    if not path.exists():
        raise MissingModel(f"model file not found: {path}")
    doc = json.loads(path.read_text())
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise MissingModel(f"unsupported model format version {version!r} in {path}")
    kind = doc.get("kind")
    if kind == "dual":
        trunk = _layers_from_payload(doc["layers"])
        _apply_scaling_payload(trunk, doc.get("input_scaling"))
        head = doc["head"]
        model = DualNetworkModel(
            trunk=trunk,
            head_w=_decode_array(head["w"], (trunk.output_dim,)),
            head_beta=_decode_value(head["beta"]),
            metric_exponent=int(doc["metric_exponent"]),
            training=_training_from_payload(doc.get("training")),
        )
        emb = doc.get("embedding")
        if emb is not None:
            model.embedding = Embedding(
                vector=_decode_array(emb["values"], (trunk.output_dim,)),
                action=emb["action"],
                source_count=int(emb["count"]),
            )
        return model
    if kind == "binary":
        net = _layers_from_payload(doc["layers"])
        _apply_scaling_payload(net, doc.get("input_scaling"))
        net.training = _training_from_payload(doc.get("training"))
        return net
    raise MissingModel(f"unknown model kind {kind!r} in {path}")
