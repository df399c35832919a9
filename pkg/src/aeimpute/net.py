"""Dense feedforward autoencoder written directly against numpy.

The network is a list of affine layers, each followed by a sigmoid or identity
squashing.  Topologies are symmetric: ``input_dim -> hidden_sizes -> mirrored
hidden sizes -> input_dim``.  With ``tied=True`` every decoder weight matrix is
the transpose of its mirrored encoder matrix (biases stay independent).

Batches are row-major ``(n_records, n_features)`` arrays throughout.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy.special import expit

from .errors import (
    ConfigError,
    IncompleteTrainingDataError,
    NormalizationError,
    ParseError,
    ShapeError,
)

SIGMOID = "sigmoid"
IDENTITY = "identity"
ACTIVATIONS = (SIGMOID, IDENTITY)

MODEL_FORMAT_VERSION = 1


def activate(kind: str, t: np.ndarray) -> np.ndarray:
    if kind == SIGMOID:
        return expit(t)
    if kind == IDENTITY:
        return t
    raise ConfigError(f"unknown activation {kind!r}")


def _activation_slope(kind: str, a: np.ndarray) -> np.ndarray:
    # derivative expressed through the activation output
    if kind == SIGMOID:
        return a * (1.0 - a)
    return np.ones_like(a)


@dataclass
class LayerParams:
    weights: np.ndarray  # (fan_out, fan_in)
    biases: np.ndarray  # (fan_out,)
    activation: str = SIGMOID

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        self.biases = np.asarray(self.biases, dtype=float)
        if self.weights.ndim != 2 or self.biases.ndim != 1:
            raise ShapeError("weights must be 2-D and biases 1-D")
        if self.biases.shape[0] != self.weights.shape[0]:
            raise ShapeError(
                f"bias length {self.biases.shape[0]} != weight rows {self.weights.shape[0]}"
            )
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.biases))):
            raise ConfigError("layer parameters must be finite")
        if self.activation not in ACTIVATIONS:
            raise ConfigError(f"unknown activation {self.activation!r}")

    @property
    def fan_in(self) -> int:
        return self.weights.shape[1]

    @property
    def fan_out(self) -> int:
        return self.weights.shape[0]

    def copy(self) -> "LayerParams":
        return LayerParams(self.weights.copy(), self.biases.copy(), self.activation)


@dataclass
class NetworkParams:
    """A trained or freshly initialised autoencoder.

    ``final_loss`` is the last epoch-mean training objective, kept so the
    imputation acceptance threshold can be derived from the model alone.
    """

    layers: list
    tied: bool = False
    final_loss: Optional[float] = None

    def __post_init__(self):
        if not self.layers:
            raise ConfigError("network needs at least one layer")
        for prev, nxt in zip(self.layers, self.layers[1:]):
            if prev.fan_out != nxt.fan_in:
                raise ShapeError(
                    f"layer output {prev.fan_out} does not feed layer input {nxt.fan_in}"
                )
        if self.layers[0].fan_in != self.layers[-1].fan_out:
            raise ShapeError("autoencoder output width must equal input width")
        if self.tied:
            n = len(self.layers)
            if n % 2:
                raise ConfigError("tied weights need an even number of layers")
            for i in range(n // 2):
                if not np.array_equal(self.layers[n - 1 - i].weights, self.layers[i].weights.T):
                    raise ConfigError(f"decoder layer {n - 1 - i} is not tied to encoder layer {i}")

    @property
    def input_dim(self) -> int:
        return self.layers[0].fan_in

    @property
    def n_layers(self) -> int:
        return len(self.layers)

    def copy(self) -> "NetworkParams":
        return NetworkParams([layer.copy() for layer in self.layers], self.tied, self.final_loss)

    def equals(self, other: "NetworkParams") -> bool:
        """Bitwise parameter equality."""
        if self.tied != other.tied or self.n_layers != other.n_layers:
            return False
        return all(
            a.activation == b.activation
            and np.array_equal(a.weights, b.weights)
            and np.array_equal(a.biases, b.biases)
            for a, b in zip(self.layers, other.layers)
        )


@dataclass
class ForwardTrace:
    input: np.ndarray
    pre_activations: list = field(default_factory=list)
    activations: list = field(default_factory=list)

    @property
    def output(self) -> np.ndarray:
        """The reconstruction ``z``."""
        return self.activations[-1]

    @property
    def code(self) -> np.ndarray:
        """The bottleneck representation ``y``."""
        return self.activations[len(self.activations) // 2 - 1] if len(self.activations) > 1 else self.activations[0]


@dataclass
class TrainConfig:
    hidden_sizes: Sequence[int] = (5, 3)
    learning_rate: float = 1.0
    epochs: int = 200
    batch_size: int = 10
    corruption: float = 0.1
    init_scale: Optional[float] = None
    seed: int = 0
    pretrain: bool = False
    tied: bool = False

    def __post_init__(self):
        self.hidden_sizes = [int(h) for h in self.hidden_sizes]
        if not self.hidden_sizes or any(h < 1 for h in self.hidden_sizes):
            raise ConfigError("hidden_sizes must be a nonempty list of positive integers")
        if not self.learning_rate > 0:
            raise ConfigError("learning_rate must be positive")
        if self.epochs < 0:
            raise ConfigError("epochs must be non-negative")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be positive")
        if not 0.0 <= self.corruption <= 1.0:
            raise ConfigError("corruption fraction must lie in [0, 1]")
        if self.init_scale is not None and self.init_scale < 0:
            raise ConfigError("init_scale must be non-negative")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")


def init_network(
    input_dim: int,
    hidden_sizes: Sequence[int],
    tied: bool = False,
    init_scale: Optional[float] = None,
    seed: int = 0,
    activation: str = SIGMOID,
    output_activation: Optional[str] = None,
) -> NetworkParams:
    """Build a symmetric autoencoder with uniform random weights and zero biases.

    ``init_scale=None`` uses ``4 / sqrt(fan_in)`` per layer.
    """
    hidden_sizes = [int(h) for h in hidden_sizes]
    if input_dim < 1 or not hidden_sizes or min(hidden_sizes) < 1:
        raise ConfigError("input_dim and every hidden size must be at least 1")
    widths = [input_dim] + hidden_sizes + hidden_sizes[-2::-1] + [input_dim]
    rng = np.random.default_rng(seed)
    n = len(widths) - 1
    layers = []
    for i in range(n):
        fan_in, fan_out = widths[i], widths[i + 1]
        act = output_activation if (i == n - 1 and output_activation) else activation
        if tied and i >= n // 2:
            w = layers[n - 1 - i].weights.T.copy()
        else:
            scale = 4.0 / np.sqrt(fan_in) if init_scale is None else float(init_scale)
            w = rng.uniform(-scale, scale, size=(fan_out, fan_in))
        layers.append(LayerParams(w, np.zeros(fan_out), act))
    return NetworkParams(layers, tied=tied)


def _forward_batch(net: NetworkParams, X: np.ndarray):
    pres, acts = [], [X]
    a = X
    for layer in net.layers:
        t = a @ layer.weights.T + layer.biases
        a = activate(layer.activation, t)
        pres.append(t)
        acts.append(a)
    return pres, acts


def reconstruct(net: NetworkParams, X: np.ndarray) -> np.ndarray:
    """Reconstruction of a vector or a batch of row vectors."""
    a = np.asarray(X, dtype=float)
    if a.shape[-1] != net.input_dim:
        raise ShapeError(f"expected {net.input_dim} features, got {a.shape[-1]}")
    for layer in net.layers:
        a = activate(layer.activation, a @ layer.weights.T + layer.biases)
    return a


def forward(net: NetworkParams, x) -> ForwardTrace:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != net.input_dim:
        raise ShapeError(f"expected a vector of length {net.input_dim}, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise NormalizationError("forward input must be finite")
    pres, acts = _forward_batch(net, x[None, :])
    return ForwardTrace(
        input=x.copy(),
        pre_activations=[p[0] for p in pres],
        activations=[a[0] for a in acts[1:]],
    )


def reconstruction_loss(x, z) -> float:
    """Squared reconstruction error, the Gaussian negative log-likelihood up to constants."""
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    if x.shape != z.shape:
        raise ShapeError(f"length mismatch: {x.shape} vs {z.shape}")
    return float(np.sum((x - z) ** 2))


def corrupt(x, nu: float, rng: np.random.Generator) -> np.ndarray:
    """Masking noise: every coordinate is zeroed independently with probability ``nu``."""
    if not 0.0 <= nu <= 1.0:
        raise ConfigError(f"corruption fraction {nu} outside [0, 1]")
    x = np.asarray(x, dtype=float)
    drop = rng.random(x.shape) < nu
    return np.where(drop, 0.0, x)


def _backward(net, pres, acts, grad_out):
    """Backpropagate ``dL/d(output)`` through the layers.

    Returns per-layer weight and bias gradients and ``dL/d(input)``.
    """
    n = net.n_layers
    g_w = [None] * n
    g_b = [None] * n
    delta = grad_out * _activation_slope(net.layers[-1].activation, acts[-1])
    for i in range(n - 1, -1, -1):
        g_w[i] = delta.T @ acts[i]
        g_b[i] = delta.sum(axis=0)
        upstream = delta @ net.layers[i].weights
        if i > 0:
            delta = upstream * _activation_slope(net.layers[i - 1].activation, acts[i])
    return g_w, g_b, upstream


def _tie_gradients(net, g_w):
    n = net.n_layers
    for i in range(n // 2):
        shared = g_w[i] + g_w[n - 1 - i].T
        g_w[i] = shared
        g_w[n - 1 - i] = shared.T.copy()


def _batch_loss_and_grads(net, inputs, targets):
    pres, acts = _forward_batch(net, inputs)
    resid = acts[-1] - targets
    per_record = np.sum(resid**2, axis=1)
    g_w, g_b, _ = _backward(net, pres, acts, 2.0 * resid / inputs.shape[0])
    if net.tied:
        _tie_gradients(net, g_w)
    return per_record, g_w, g_b


def grad_params(net: NetworkParams, batch, targets=None):
    """Gradients of the batch-mean reconstruction loss.

    Returns a list of ``(dW, db)`` pairs aligned with ``net.layers``.  For tied
    networks both halves of a tied pair hold the same summed gradient (the
    decoder copy transposed).  ``targets`` defaults to ``batch`` itself.
    """
    X = np.atleast_2d(np.asarray(batch, dtype=float))
    if X.shape[0] == 0 or X.size == 0:
        raise ShapeError("batch must contain at least one record")
    if X.shape[1] != net.input_dim:
        raise ShapeError(f"expected {net.input_dim} features, got {X.shape[1]}")
    T = X if targets is None else np.atleast_2d(np.asarray(targets, dtype=float))
    if T.shape != X.shape:
        raise ShapeError("targets must match batch shape")
    _, g_w, g_b = _batch_loss_and_grads(net, X, T)
    return list(zip(g_w, g_b))


def grad_input(net: NetworkParams, x, free_indices) -> np.ndarray:
    """Total derivative of ``||x - z(x)||^2`` with respect to selected inputs.

    ``x`` appears both as network input and as comparison target.
    """
    x = np.asarray(x, dtype=float)
    free = np.asarray(list(free_indices), dtype=int)
    if x.ndim != 1 or x.shape[0] != net.input_dim:
        raise ShapeError(f"expected a vector of length {net.input_dim}")
    if free.size and (free.min() < 0 or free.max() >= net.input_dim):
        raise ShapeError("free index out of range")
    if free.size == 0:
        return np.zeros(0)
    pres, acts = _forward_batch(net, x[None, :])
    resid = x - acts[-1][0]
    _, _, through_net = _backward(net, pres, acts, -2.0 * resid[None, :])
    total = 2.0 * resid + through_net[0]
    return total[free]


def _check_training_data(data: np.ndarray):
    if data.ndim != 2:
        raise ShapeError("training data must be a 2-D matrix")
    if np.any(np.isnan(data)):
        raise IncompleteTrainingDataError("training data contains missing cells")
    if not np.all(np.isfinite(data)) or data.min(initial=0.0) < 0.0 or data.max(initial=0.0) > 1.0:
        raise NormalizationError("training data must be normalized to [0, 1]")


def _sgd(net, data, cfg, denoising, shuffle_rng, corrupt_rng, epochs):
    history = []
    n = data.shape[0]
    lr = cfg.learning_rate
    half = net.n_layers // 2
    for _ in range(epochs):
        order = shuffle_rng.permutation(n)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            clean = data[order[start : start + cfg.batch_size]]
            inputs = corrupt(clean, cfg.corruption, corrupt_rng) if denoising else clean
            per_record, g_w, g_b = _batch_loss_and_grads(net, inputs, clean)
            total += float(per_record.sum())
            for i, layer in enumerate(net.layers):
                if net.tied and i >= half:
                    layer.weights = net.layers[net.n_layers - 1 - i].weights.T.copy()
                else:
                    layer.weights = layer.weights - lr * g_w[i]
                layer.biases = layer.biases - lr * g_b[i]
        history.append(total / n)
    return history


def train(data, cfg: TrainConfig, denoising: bool = False):
    """Fit an SAE (``denoising=False``) or SDAE by minibatch SGD.

    Returns ``(net, loss_history)`` where ``loss_history[e]`` is the mean per-record
    objective accumulated during epoch ``e``.  With ``cfg.pretrain`` each
    encoder/decoder pair is first trained as a shallow autoencoder on the
    representation produced by the layers beneath it.
    """
    data = np.asarray(data, dtype=float)
    _check_training_data(data)
    if data.shape[0] == 0:
        raise IncompleteTrainingDataError("no complete records to train on")
    net = init_network(data.shape[1], cfg.hidden_sizes, cfg.tied, cfg.init_scale, cfg.seed)
    shuffle_rng = np.random.default_rng([cfg.seed, 1])
    corrupt_rng = np.random.default_rng([cfg.seed, 2])
    if cfg.epochs == 0:
        return net, []

    if cfg.pretrain:
        pre_shuffle = np.random.default_rng([cfg.seed, 3])
        pre_corrupt = np.random.default_rng([cfg.seed, 4])
        n = net.n_layers
        rep = data
        for i in range(n // 2):
            pair = NetworkParams([net.layers[i], net.layers[n - 1 - i]], tied=net.tied)
            _sgd(pair, rep, cfg, denoising, pre_shuffle, pre_corrupt, cfg.epochs)
            net.layers[i], net.layers[n - 1 - i] = pair.layers
            rep = activate(net.layers[i].activation, rep @ net.layers[i].weights.T + net.layers[i].biases)

    history = _sgd(net, data, cfg, denoising, shuffle_rng, corrupt_rng, cfg.epochs)
    net.final_loss = history[-1]
    return net, history


def model_to_dict(net: NetworkParams, norm_stats: Optional[dict] = None) -> dict:
    doc = {
        "format_version": MODEL_FORMAT_VERSION,
        "input_dim": net.input_dim,
        "tied": net.tied,
        "final_loss": net.final_loss,
        "layers": [
            {
                "rows": layer.fan_out,
                "cols": layer.fan_in,
                "activation": layer.activation,
                "weights": [float(v) for v in layer.weights.ravel()],
                "biases": [float(v) for v in layer.biases],
            }
            for layer in net.layers
        ],
    }
    if norm_stats is not None:
        doc["norm_stats"] = norm_stats
    return doc


def model_from_dict(doc: dict):
    """Inverse of :func:`model_to_dict`; returns ``(net, norm_stats or None)``."""
    try:
        if doc["format_version"] != MODEL_FORMAT_VERSION:
            raise ParseError(f"unsupported model format_version {doc['format_version']}")
        layers = []
        for spec in doc["layers"]:
            w = np.array(spec["weights"], dtype=float).reshape(spec["rows"], spec["cols"])
            layers.append(LayerParams(w, np.array(spec["biases"], dtype=float), spec["activation"]))
        net = NetworkParams(layers, tied=bool(doc["tied"]), final_loss=doc.get("final_loss"))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(f"malformed model document: {exc}") from exc
    if net.input_dim != doc["input_dim"]:
        raise ParseError("input_dim does not match layer shapes")
    return net, doc.get("norm_stats")


def save_model(net: NetworkParams, path, norm_stats: Optional[dict] = None) -> None:
    # json writes floats with repr(), the shortest string that round-trips exactly
    Path(path).write_text(json.dumps(model_to_dict(net, norm_stats), indent=1))


def load_model(path):
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"model file is not valid JSON: {exc}", path=path) from exc
    return model_from_dict(doc)
