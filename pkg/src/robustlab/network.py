"""Feedforward classifier: forward pass, cross-entropy loss, and
reverse-mode gradients with respect to inputs and parameters.

Networks are immutable after construction; every operation here is pure,
so a single network can be shared across concurrent attack workers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    CoverageUndefinedError,
    DimensionError,
    UnsupportedActivationError,
)
from .tensor import Rng, as_mat, as_vec

ACTIVATIONS = ("relu", "sigmoid", "tanh", "identity")

# Probability clamp inside log; attacks drive logits to extremes and the
# loss must stay finite there.
PROB_FLOOR = 1e-12


def _act(name: str, z: np.ndarray) -> np.ndarray:
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "sigmoid":
        # Stable piecewise form, avoids overflow in exp for |z| large.
        out = np.empty_like(z)
        pos = z >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
        ez = np.exp(z[~pos])
        out[~pos] = ez / (1.0 + ez)
        return out
    if name == "tanh":
        return np.tanh(z)
    if name == "identity":
        return z
    raise UnsupportedActivationError(f"unsupported activation {name!r}")


def _act_deriv(name: str, z: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Derivative w.r.t. pre-activation z; `a` is the post-activation.

    ReLU derivative at exactly 0 is 0 (fixed convention).
    """
    if name == "relu":
        return (z > 0).astype(np.float64)
    if name == "sigmoid":
        return a * (1.0 - a)
    if name == "tanh":
        return 1.0 - a * a
    if name == "identity":
        return np.ones_like(z)
    raise UnsupportedActivationError(f"unsupported activation {name!r}")


@dataclass(frozen=True, eq=False)
class Layer:
    """One dense layer: out = activation(weights @ in + bias)."""

    weights: np.ndarray
    bias: np.ndarray
    activation: str = "identity"

    def __post_init__(self):
        object.__setattr__(self, "weights", as_mat(self.weights))
        object.__setattr__(self, "bias", as_vec(self.bias, dim=self.weights.shape[0]))
        if self.activation not in ACTIVATIONS:
            raise UnsupportedActivationError(
                f"unsupported activation {self.activation!r}; expected one of {ACTIVATIONS}"
            )

    @property
    def rows(self) -> int:
        return self.weights.shape[0]

    @property
    def cols(self) -> int:
        return self.weights.shape[1]


@dataclass(frozen=True, eq=False)
class Network:
    """Layered feedforward model mapping input vectors to class logits."""

    layers: tuple[Layer, ...]
    input_dim: int
    num_classes: int

    def __post_init__(self):
        layers = tuple(self.layers)
        object.__setattr__(self, "layers", layers)
        if not layers:
            raise ValueError("network needs at least one layer")
        expected = self.input_dim
        for i, layer in enumerate(layers):
            if layer.cols != expected:
                raise DimensionError(
                    f"layer {i} expects input of length {layer.cols}, chain gives {expected}"
                )
            expected = layer.rows
        if expected != self.num_classes:
            raise DimensionError(
                f"final layer has {expected} units, expected num_classes={self.num_classes}"
            )

    @property
    def hidden_unit_count(self) -> int:
        return sum(layer.rows for layer in self.layers[:-1])


@dataclass(frozen=True, eq=False)
class Prediction:
    logits: np.ndarray
    probabilities: np.ndarray
    label: int


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    inputs: tuple[np.ndarray, ...]
    labels: tuple[int, ...]

    def __post_init__(self):
        inputs = tuple(as_vec(x) for x in self.inputs)
        labels = tuple(int(y) for y in self.labels)
        if len(inputs) != len(labels):
            raise DimensionError("inputs and labels differ in length")
        if inputs:
            d = inputs[0].size
            for x in inputs:
                if x.size != d:
                    raise DimensionError("dataset inputs have mixed dimensions")
        if any(y < 0 for y in labels):
            raise ValueError("labels must be non-negative")
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return len(self.inputs)

    def __iter__(self):
        return iter(zip(self.inputs, self.labels))

    @property
    def input_dim(self) -> int:
        if not self.inputs:
            raise ValueError("empty dataset has no input dimension")
        return self.inputs[0].size


def softmax(logits: np.ndarray) -> np.ndarray:
    """Numerically stable softmax (max-logit subtraction)."""
    z = logits - np.max(logits)
    e = np.exp(z)
    return e / np.sum(e)


def forward_trace(net: Network, x) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Per-layer pre-activations and post-activations (post[-1] = logits)."""
    h = as_vec(x, dim=net.input_dim)
    pre: list[np.ndarray] = []
    post: list[np.ndarray] = []
    for layer in net.layers:
        z = layer.weights @ h + layer.bias
        h = _act(layer.activation, z)
        pre.append(z)
        post.append(h)
    return pre, post


def forward(net: Network, x) -> Prediction:
    _, post = forward_trace(net, x)
    logits = post[-1]
    probs = softmax(logits)
    label = int(np.argmax(logits))  # argmax ties break to the lowest index
    return Prediction(logits=logits, probabilities=probs, label=label)


def _check_class(net: Network, y: int) -> int:
    y = int(y)
    if not 0 <= y < net.num_classes:
        raise ValueError(f"class index {y} out of range [0, {net.num_classes})")
    return y


def loss(net: Network, x, y: int) -> float:
    """Cross-entropy -log p_y with the probability clamped at PROB_FLOOR."""
    y = _check_class(net, y)
    p = forward(net, x).probabilities
    return float(-np.log(max(p[y], PROB_FLOOR)))


def _backward(net: Network, x, d_logits: np.ndarray):
    """Reverse-mode sweep seeded with d(objective)/d(logits).

    Returns (d_input, [(dW, db) per layer]).
    """
    x = as_vec(x, dim=net.input_dim)
    pre, post = forward_trace(net, x)
    acts = [x] + post  # acts[k] feeds layer k
    delta = d_logits * _act_deriv(net.layers[-1].activation, pre[-1], post[-1])
    grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(net.layers)  # type: ignore
    for k in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[k]
        grads[k] = (np.outer(delta, acts[k]), delta.copy())
        delta = layer.weights.T @ delta
        if k > 0:
            prev = net.layers[k - 1]
            delta = delta * _act_deriv(prev.activation, pre[k - 1], post[k - 1])
    return delta, grads


def _loss_logit_grad(net: Network, x, y: int) -> np.ndarray:
    p = softmax(forward_trace(net, x)[1][-1])
    d = p.copy()
    d[y] -= 1.0
    return d


def grad_input(net: Network, x, y: int) -> np.ndarray:
    """Gradient of the cross-entropy loss with respect to the input."""
    y = _check_class(net, y)
    d_input, _ = _backward(net, x, _loss_logit_grad(net, x, y))
    return d_input


def grad_params(net: Network, x, y: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Per-layer (dL/dW, dL/db) for the cross-entropy loss at (x, y)."""
    y = _check_class(net, y)
    _, grads = _backward(net, x, _loss_logit_grad(net, x, y))
    return grads


def grad_logit(net: Network, x, k: int) -> np.ndarray:
    """Gradient of logit k (pre-softmax output) with respect to the input."""
    k = _check_class(net, k)
    seed = np.zeros(net.num_classes)
    seed[k] = 1.0
    d_input, _ = _backward(net, x, seed)
    return d_input


def init_network(
    input_dim: int,
    hidden: list[int],
    num_classes: int,
    rng: Rng,
    activation: str = "relu",
    scale: float = 1.0,
) -> Network:
    """Random network with the given hidden sizes; last layer is identity.

    Weights ~ N(0, scale^2 / fan_in), biases zero.
    """
    dims = [input_dim] + list(hidden) + [num_classes]
    layers = []
    for i in range(len(dims) - 1):
        fan_in = dims[i]
        w = rng.normal(size=dims[i + 1] * fan_in, scale=scale / np.sqrt(fan_in))
        act = activation if i < len(dims) - 2 else "identity"
        layers.append(
            Layer(
                weights=w.reshape(dims[i + 1], fan_in),
                bias=np.zeros(dims[i + 1]),
                activation=act,
            )
        )
    return Network(layers=tuple(layers), input_dim=input_dim, num_classes=num_classes)


def mean_loss(net: Network, data: LabeledDataset) -> float:
    if len(data) == 0:
        raise ValueError("empty dataset")
    return float(np.mean([loss(net, x, y) for x, y in data]))


def _mean_param_grads(net: Network, inputs, labels):
    total = [
        (np.zeros_like(layer.weights), np.zeros_like(layer.bias))
        for layer in net.layers
    ]
    for x, y in zip(inputs, labels):
        for k, (dw, db) in enumerate(grad_params(net, x, y)):
            total[k] = (total[k][0] + dw, total[k][1] + db)
    n = float(len(labels))
    return [(dw / n, db / n) for dw, db in total]


def gradient_step(net: Network, grads, learning_rate: float) -> Network:
    """New network with parameters moved one step against the gradients."""
    layers = tuple(
        Layer(
            weights=layer.weights - learning_rate * dw,
            bias=layer.bias - learning_rate * db,
            activation=layer.activation,
        )
        for layer, (dw, db) in zip(net.layers, grads)
    )
    return Network(layers=layers, input_dim=net.input_dim, num_classes=net.num_classes)


def train(
    net: Network,
    data: LabeledDataset,
    epochs: int,
    learning_rate: float,
    rng: Rng | None = None,
) -> Network:
    """Full-batch gradient descent on the mean cross-entropy loss.

    Deterministic given the starting network; `rng` is accepted for
    interface symmetry with stochastic trainers but never drawn from.
    Returns a new network; epochs=0 returns the input unchanged.
    """
    if len(data) == 0:
        raise ValueError("empty dataset")
    for x in data.inputs:
        as_vec(x, dim=net.input_dim)
    for _, y in data:
        _check_class(net, y)
    current = net
    for _ in range(int(epochs)):
        grads = _mean_param_grads(current, data.inputs, data.labels)
        current = gradient_step(current, grads, learning_rate)
    return current


def accuracy(net: Network, data: LabeledDataset) -> float:
    if len(data) == 0:
        raise ValueError("empty dataset")
    hits = sum(1 for x, y in data if forward(net, x).label == y)
    return hits / len(data)


def neuron_coverage(net: Network, inputs, threshold: float) -> float:
    """Fraction of hidden units whose post-activation exceeds `threshold`
    for at least one of the given inputs."""
    if not net.layers[:-1]:
        raise CoverageUndefinedError("network has no hidden units")
    inputs = list(inputs)
    if not inputs:
        raise ValueError("neuron_coverage requires at least one input")
    covered = [np.zeros(layer.rows, dtype=bool) for layer in net.layers[:-1]]
    for x in inputs:
        _, post = forward_trace(net, x)
        for k in range(len(net.layers) - 1):
            covered[k] |= post[k] > threshold
    total = sum(c.size for c in covered)
    hit = sum(int(np.count_nonzero(c)) for c in covered)
    return hit / total
