"""Task losses that steer fixation selection.

Three model kinds are supported:

``reconstruction_proxy``
    Mean squared error between the agent state and the original image, i.e. an
    autoencoder whose encoder and decoder are the identity. No weights needed.
``mlp_classifier``
    A small fully connected network with a cross-entropy loss on one target class.
``mlp_autoencoder``
    A fully connected network scored by MSE against the (resized) original.

MLP weights come from a JSON file::

    {"input": {"width": 16, "height": 16, "channels": 1},
     "loss": "cross_entropy",
     "target_index": 0,
     "layers": [{"rows": 256, "cols": 2, "weights": [...], "bias": [...],
                 "activation": "softmax"}]}

A layer maps a row vector ``x`` of length ``rows`` to ``act(x @ W + b)`` of
length ``cols``; ``weights`` is ``W`` flattened row-major. Images are flattened
in ``(row, column, channel)`` order after a nearest-neighbour resize to the
model input size.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidModel, InvalidParameter
from .imaging import Stimulus, resize_nearest

LOG_EPS = 1e-12
ACTIVATIONS = ("relu", "identity", "softmax")
KINDS = ("reconstruction_proxy", "mlp_classifier", "mlp_autoencoder")


@dataclass(frozen=True, eq=False)
class Layer:
    weights: np.ndarray  # (rows, cols)
    bias: np.ndarray  # (cols,)
    activation: str = "identity"

    @property
    def rows(self) -> int:
        return self.weights.shape[0]

    @property
    def cols(self) -> int:
        return self.weights.shape[1]


@dataclass(frozen=True, eq=False)
class MlpWeights:
    layers: list
    loss_kind: str
    target_index: int | None = None

    def __post_init__(self):
        if not self.layers:
            raise InvalidModel("model has no layers")
        if self.loss_kind not in ("cross_entropy", "mse"):
            raise InvalidModel(f"unknown loss {self.loss_kind!r}")
        for i, layer in enumerate(self.layers):
            if layer.activation not in ACTIVATIONS:
                raise InvalidModel(f"layer {i}: unknown activation {layer.activation!r}")
            if layer.weights.ndim != 2 or layer.bias.shape != (layer.cols,):
                raise InvalidModel(f"layer {i}: bias length must equal cols")
            if not (np.all(np.isfinite(layer.weights)) and np.all(np.isfinite(layer.bias))):
                raise InvalidModel(f"layer {i}: non-finite parameter")
            if i and self.layers[i - 1].cols != layer.rows:
                raise InvalidModel(
                    f"layer {i}: expects {layer.rows} inputs, previous layer emits "
                    f"{self.layers[i - 1].cols}")
            if layer.activation == "softmax":
                if i != len(self.layers) - 1 or self.loss_kind != "cross_entropy":
                    raise InvalidModel("softmax is only allowed as the final activation "
                                       "of a cross-entropy model")
        if self.target_index is not None and not 0 <= self.target_index < self.layers[-1].cols:
            raise InvalidModel(f"target_index {self.target_index} out of range")

    @property
    def n_inputs(self) -> int:
        return self.layers[0].rows


@dataclass(frozen=True, eq=False)
class TaskLossModel:
    kind: str = "reconstruction_proxy"
    weights: MlpWeights | None = None
    input_spec: tuple | None = None  # (width, height, channels)
    name: str = field(default="")

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidModel(f"unknown model kind {self.kind!r}")
        if self.kind == "reconstruction_proxy":
            return
        if self.weights is None or self.input_spec is None:
            raise InvalidModel(f"{self.kind} needs weights and an input spec")
        w, h, c = self.input_spec
        if w * h * c != self.weights.n_inputs:
            raise InvalidModel(
                f"input spec {w}x{h}x{c} does not match first layer ({self.weights.n_inputs} rows)")
        if self.kind == "mlp_autoencoder" and self.weights.layers[-1].cols != w * h * c:
            raise InvalidModel("autoencoder output size must equal its input size")


def softmax(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - np.max(z))
    return e / e.sum()


def mlp_forward(weights: MlpWeights, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.size != weights.n_inputs:
        raise InvalidParameter(f"input has {x.size} values, model expects {weights.n_inputs}")
    for layer in weights.layers:
        x = x @ layer.weights + layer.bias
        if layer.activation == "relu":
            x = np.maximum(x, 0.0)
        elif layer.activation == "softmax":
            x = softmax(x)
    return x


def reconstruction_proxy_loss(agent_state: Stimulus, original: Stimulus) -> float:
    if agent_state.shape != original.shape:
        raise InvalidParameter(f"shape mismatch: {agent_state.shape} vs {original.shape}")
    d = agent_state.data - original.data
    return float(np.mean(d * d))


def _model_input(model: TaskLossModel, image: np.ndarray) -> np.ndarray:
    w, h, c = model.input_spec
    a = resize_nearest(image, w, h)
    if a.shape[2] != c:
        if c == 1:
            a = a.mean(axis=2, keepdims=True)
        else:
            a = np.repeat(a[:, :, :1], c, axis=2)
    return a.ravel()


def task_loss(model: TaskLossModel, agent_state: Stimulus, original: Stimulus) -> float:
    """Loss of ``model`` when fed the agent state (lower is better for the task)."""
    if model.kind == "reconstruction_proxy":
        return reconstruction_proxy_loss(agent_state, original)
    mw = model.weights
    out = mlp_forward(mw, _model_input(model, agent_state.data))
    if mw.loss_kind == "cross_entropy":
        if mw.target_index is None:
            raise InvalidModel("cross-entropy model needs a target_index")
        p = out if mw.layers[-1].activation == "softmax" else softmax(out)
        # p == 1 would give -log(1 + eps) < 0
        return max(0.0, -math.log(p[mw.target_index] + LOG_EPS))
    target = _model_input(model, original.data)
    if out.size != target.size:
        raise InvalidModel("mse model output does not match its reconstruction target")
    d = out - target
    return float(np.mean(d * d))


def _parse_layer(i, spec) -> Layer:
    try:
        rows, cols = int(spec["rows"]), int(spec["cols"])
        w = np.asarray(spec["weights"], dtype=np.float64)
        b = np.asarray(spec["bias"], dtype=np.float64)
        act = spec.get("activation", "identity")
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidModel(f"layer {i}: {exc}") from exc
    if w.size != rows * cols:
        raise InvalidModel(f"layer {i}: {w.size} weights for a {rows}x{cols} matrix")
    return Layer(w.reshape(rows, cols), b, act)


def model_from_dict(d: dict, name: str = "") -> TaskLossModel:
    try:
        inp = d["input"]
        spec = (int(inp["width"]), int(inp["height"]), int(inp["channels"]))
        loss = d["loss"]
        layers = [_parse_layer(i, s) for i, s in enumerate(d["layers"])]
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidModel(f"malformed weights: {exc!r}") from exc
    target = d.get("target_index")
    weights = MlpWeights(layers, loss, None if target is None else int(target))
    kind = "mlp_classifier" if loss == "cross_entropy" else "mlp_autoencoder"
    return TaskLossModel(kind=kind, weights=weights, input_spec=spec, name=name)


def model_to_dict(model: TaskLossModel) -> dict:
    w, h, c = model.input_spec
    d = {
        "input": {"width": w, "height": h, "channels": c},
        "loss": model.weights.loss_kind,
        "layers": [
            {"rows": L.rows, "cols": L.cols, "weights": L.weights.ravel().tolist(),
             "bias": L.bias.tolist(), "activation": L.activation}
            for L in model.weights.layers
        ],
    }
    if model.weights.target_index is not None:
        d["target_index"] = model.weights.target_index
    return d


def load_model(path) -> TaskLossModel:
    path = Path(path)
    try:
        d = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidModel(f"cannot read weights file {path}: {exc}") from exc
    return model_from_dict(d, name=path.stem)


def save_model(model: TaskLossModel, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(model_to_dict(model)))
    return path


def bright_side_classifier(target: str = "left", size: int = 16, gain: float = 0.5,
                           threshold: float = 0.6) -> TaskLossModel:
    """Two-class "bright-left vs bright-right" classifier on a greyscale image.

    The hidden layer keeps only pixels brighter than ``threshold``, so sharp
    bright detail counts while blurred detail does not; the output compares the
    surviving brightness in the left and right halves. Class 0 is "left".
    """
    if target not in ("left", "right"):
        raise InvalidParameter(f"target must be 'left' or 'right', got {target!r}")
    n = size * size
    cols = np.tile(np.arange(size), size)
    side = np.where(cols < size // 2, 1.0, -1.0)
    head = np.stack([gain * side, -gain * side], axis=1)
    layers = [
        Layer(np.eye(n), np.full(n, -threshold), "relu"),
        Layer(head, np.zeros(2), "softmax"),
    ]
    weights = MlpWeights(layers, "cross_entropy", 0 if target == "left" else 1)
    return TaskLossModel("mlp_classifier", weights, (size, size, 1), name=f"bright_{target}")
