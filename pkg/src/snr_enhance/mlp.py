"""Feed-forward mask estimator: ReLU hidden layers, sigmoid output.

Trained on the squared error between biased log masks,
``sum_k (ln(m_hat + eps) - ln(m + eps))**2``, with AdaGrad.
Weights are stored ``(out, in)`` so that a layer computes ``x @ W.T + b``.
"""
import struct
from dataclasses import dataclass

import numpy as np

from .errors import CorruptModelError, InvalidConfigError, ShapeError

MODEL_MAGIC = b"SNRDNN1\x00"
MODEL_VERSION = 1
ACTIVATIONS = {"relu": 0, "sigmoid": 1}
_ACT_BY_ID = {v: k for k, v in ACTIVATIONS.items()}

DEFAULT_HIDDEN = (1024, 1024, 1024)


@dataclass
class Layer:
    weight: np.ndarray
    bias: np.ndarray
    activation: str

    @property
    def in_dim(self):
        return self.weight.shape[1]

    @property
    def out_dim(self):
        return self.weight.shape[0]


@dataclass
class MlpModel:
    layers: list

    def __post_init__(self):
        if not self.layers:
            raise InvalidConfigError("model needs at least one layer")
        for i, layer in enumerate(self.layers):
            if layer.activation not in ACTIVATIONS:
                raise InvalidConfigError(f"unknown activation {layer.activation!r}")
            if layer.bias.shape != (layer.out_dim,):
                raise ShapeError(f"layer {i}: bias shape {layer.bias.shape} != ({layer.out_dim},)")
            if i and self.layers[i - 1].out_dim != layer.in_dim:
                raise ShapeError(
                    f"layer {i} expects {layer.in_dim} inputs but layer {i - 1} "
                    f"produces {self.layers[i - 1].out_dim}")

    @property
    def input_dim(self):
        return self.layers[0].in_dim

    @property
    def output_dim(self):
        return self.layers[-1].out_dim

    @property
    def dims(self):
        return [self.input_dim] + [layer.out_dim for layer in self.layers]

    def params(self):
        """Flat list of parameter arrays, ``[W0, b0, W1, b1, ...]`` (views)."""
        out = []
        for layer in self.layers:
            out.extend([layer.weight, layer.bias])
        return out

    def copy(self):
        return MlpModel([Layer(l.weight.copy(), l.bias.copy(), l.activation) for l in self.layers])

    def n_params(self):
        return sum(p.size for p in self.params())


def glorot_init(dims, seed=0):
    """Uniform Glorot initialization; ReLU hidden layers and a sigmoid output.

    Parameters
    ----------
    dims : sequence of int
        Layer widths from input to output, e.g. ``[1028, 1024, 1024, 1024, 257]``.
    seed : int or numpy.random.Generator
    """
    dims = [int(d) for d in dims]
    if len(dims) < 2 or any(d < 1 for d in dims):
        raise InvalidConfigError(f"need at least two positive layer widths, got {dims}")
    rng = np.random.default_rng(seed)
    layers = []
    for i, (fan_in, fan_out) in enumerate(zip(dims[:-1], dims[1:])):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        w = rng.uniform(-limit, limit, size=(fan_out, fan_in))
        act = "sigmoid" if i == len(dims) - 2 else "relu"
        layers.append(Layer(w, np.zeros(fan_out), act))
    return MlpModel(layers)


def default_dims(input_dim, output_dim=257, hidden=DEFAULT_HIDDEN):
    return [input_dim, *hidden, output_dim]


def _sigmoid(z):
    # split by sign to avoid overflow in exp
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _activate(z, name):
    return np.maximum(z, 0.0) if name == "relu" else _sigmoid(z)


def forward(model, x, return_activations=False):
    """Mask estimate for one input vector or a ``(batch, dim)`` matrix."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    a = x[None, :] if single else x
    if a.shape[1] != model.input_dim:
        raise ShapeError(f"model expects input dim {model.input_dim}, got {a.shape[1]}")
    acts = [a]
    for layer in model.layers:
        a = _activate(a @ layer.weight.T + layer.bias, layer.activation)
        acts.append(a)
    if return_activations:
        return acts
    return a[0] if single else a


def loss(irm_hat, irm, eps=0.1):
    """Summed squared error of biased log masks over all given frames and bins."""
    d = np.log(np.asarray(irm_hat, dtype=np.float64) + eps) - np.log(
        np.asarray(irm, dtype=np.float64) + eps)
    return float(np.sum(d * d))


def frame_losses(irm_hat, irm, eps=0.1):
    """Loss per frame (row), summed over bins."""
    d = np.log(irm_hat + eps) - np.log(irm + eps)
    return np.sum(d * d, axis=-1)


def backward(model, inputs, targets, eps=0.1):
    """Gradients of the batch-mean loss with respect to all parameters.

    Returns
    -------
    grads : list of ndarray
        Same order as :meth:`MlpModel.params`.
    batch_loss : float
        Mean per-frame loss of the batch.
    """
    inputs = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    targets = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    if inputs.shape[0] == 0:
        raise ShapeError("empty batch")
    if targets.shape != (inputs.shape[0], model.output_dim):
        raise ShapeError(
            f"targets shape {targets.shape} does not match "
            f"({inputs.shape[0]}, {model.output_dim})")
    acts = forward(model, inputs, return_activations=True)
    y = acts[-1]
    n = inputs.shape[0]
    diff = np.log(y + eps) - np.log(targets + eps)
    batch_loss = float(np.sum(diff * diff)) / n

    grads = [None] * (2 * len(model.layers))
    # dJ/dy, then through the output nonlinearity
    delta = (2.0 / n) * diff / (y + eps)
    for i in range(len(model.layers) - 1, -1, -1):
        layer = model.layers[i]
        out = acts[i + 1]
        if layer.activation == "sigmoid":
            delta = delta * out * (1.0 - out)
        else:
            # subgradient 0 at exactly 0
            delta = delta * (out > 0.0)
        grads[2 * i] = delta.T @ acts[i]
        grads[2 * i + 1] = delta.sum(axis=0)
        if i:
            delta = delta @ layer.weight
    return grads, batch_loss


@dataclass
class AdaGradState:
    accumulators: list
    learning_rate: float = 0.005
    stability_eps: float = 1e-8

    @classmethod
    def for_model(cls, model, learning_rate=0.005, stability_eps=1e-8):
        return cls([np.zeros_like(p) for p in model.params()], learning_rate, stability_eps)


def adagrad_step(model, opt, grads):
    """In-place AdaGrad update of ``model`` and ``opt``; returns both."""
    params = model.params()
    if len(grads) != len(params):
        raise ShapeError(f"expected {len(params)} gradient arrays, got {len(grads)}")
    for p, acc, g in zip(params, opt.accumulators, grads):
        if g.shape != p.shape:
            raise ShapeError(f"gradient shape {g.shape} does not match parameter {p.shape}")
        acc += g * g
        p -= opt.learning_rate * g / (np.sqrt(acc) + opt.stability_eps)
    return model, opt


def save(model, path):
    """Write the little-endian ``SNRDNN1`` model file."""
    with open(path, "wb") as f:
        f.write(MODEL_MAGIC)
        f.write(struct.pack("<II", MODEL_VERSION, len(model.layers)))
        for layer in model.layers:
            f.write(struct.pack("<IIB", layer.in_dim, layer.out_dim, ACTIVATIONS[layer.activation]))
        for layer in model.layers:
            f.write(np.ascontiguousarray(layer.weight, dtype="<f8").tobytes())
            f.write(np.ascontiguousarray(layer.bias, dtype="<f8").tobytes())


def load(path):
    """Read a model written by :func:`save`.

    Raises
    ------
    CorruptModelError
        On bad magic, unsupported version, inconsistent header or a size
        mismatch (truncated or trailing data).
    """
    with open(path, "rb") as f:
        data = f.read()
    return loads(data)


def loads(data):
    if len(data) < 8 or data[:8] != MODEL_MAGIC:
        raise CorruptModelError(f"bad model magic {data[:8]!r}, expected {MODEL_MAGIC!r}")
    pos = 8
    try:
        version, n_layers = struct.unpack_from("<II", data, pos)
        pos += 8
        if version != MODEL_VERSION:
            raise CorruptModelError(f"unsupported model version {version}")
        headers = []
        for _ in range(n_layers):
            headers.append(struct.unpack_from("<IIB", data, pos))
            pos += 9
    except struct.error as exc:
        raise CorruptModelError(f"truncated model header: {exc}") from None
    expected = pos + 8 * sum(o * i + o for i, o, _ in headers)
    if len(data) != expected:
        raise CorruptModelError(f"model file has {len(data)} bytes, header implies {expected}")
    layers = []
    for in_dim, out_dim, act_id in headers:
        if act_id not in _ACT_BY_ID:
            raise CorruptModelError(f"unknown activation id {act_id}")
        w = np.frombuffer(data, "<f8", in_dim * out_dim, pos).reshape(out_dim, in_dim)
        pos += 8 * w.size
        b = np.frombuffer(data, "<f8", out_dim, pos)
        pos += 8 * out_dim
        layers.append(Layer(w.astype(np.float64), b.astype(np.float64), _ACT_BY_ID[act_id]))
    try:
        return MlpModel(layers)
    except (InvalidConfigError, ShapeError) as exc:
        raise CorruptModelError(f"inconsistent model layers: {exc}") from None
