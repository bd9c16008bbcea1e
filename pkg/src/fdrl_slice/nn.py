"""Small dense networks in float64 with hand-written backprop and Adam.

Parameters flatten layer by layer: weight matrix (out_dim x in_dim,
row-major) followed by the bias vector. That ordering is shared with the
checkpoint format and the federated payloads.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ContractError


class Activation(str, enum.Enum):
    RELU = "relu"
    SIGMOID = "sigmoid"
    IDENTITY = "identity"


@dataclass(frozen=True)
class LayerSpec:
    in_dim: int
    out_dim: int
    activation: Activation = Activation.RELU

    def __post_init__(self):
        object.__setattr__(self, "activation", Activation(self.activation))
        if self.in_dim < 1 or self.out_dim < 1:
            raise ConfigError(f"layer dims must be positive, got {self.in_dim}->{self.out_dim}")

    @property
    def n_params(self) -> int:
        return self.in_dim * self.out_dim + self.out_dim


def mlp_spec(sizes, hidden_activation=Activation.RELU, output_activation=Activation.IDENTITY) -> list[LayerSpec]:
    """Chain of layers for sizes like [10, 400, 300, 5]."""
    sizes = list(sizes)
    out = []
    for i in range(len(sizes) - 1):
        act = output_activation if i == len(sizes) - 2 else hidden_activation
        out.append(LayerSpec(sizes[i], sizes[i + 1], act))
    return out


def check_spec(spec) -> None:
    for a, b in zip(spec, spec[1:]):
        if a.out_dim != b.in_dim:
            raise ConfigError(f"layer dims do not chain: {a.out_dim} -> {b.in_dim}")


def spec_param_count(spec) -> int:
    return sum(layer.n_params for layer in spec)


class NetParams:
    """Parameters of a layer chain stored in one flat float64 vector.

    ``weights[i]`` and ``biases[i]`` are views into ``data`` laid out in the
    canonical flat order.
    """

    def __init__(self, spec, data=None):
        self.spec = tuple(spec)
        n = spec_param_count(self.spec)
        self.data = np.zeros(n) if data is None else np.ascontiguousarray(data, dtype=float)
        if self.data.shape != (n,):
            raise ContractError(f"parameter vector has shape {self.data.shape}, expected ({n},)")
        self.weights, self.biases = [], []
        i = 0
        for layer in self.spec:
            k = layer.in_dim * layer.out_dim
            self.weights.append(self.data[i:i + k].reshape(layer.out_dim, layer.in_dim))
            i += k
            self.biases.append(self.data[i:i + layer.out_dim])
            i += layer.out_dim

    @property
    def n_params(self) -> int:
        return self.data.size

    def copy(self) -> "NetParams":
        return NetParams(self.spec, self.data.copy())

    def zeros_like(self) -> "NetParams":
        return NetParams(self.spec)

    def arrays(self):
        for w, b in zip(self.weights, self.biases):
            yield w
            yield b

    def __repr__(self):
        dims = [self.spec[0].in_dim] + [layer.out_dim for layer in self.spec] if self.spec else []
        return f"NetParams({'->'.join(map(str, dims))}, {self.n_params} params)"


# Gradients share the parameter layout.
Gradients = NetParams


def init_params(spec, rng: np.random.Generator) -> NetParams:
    spec = tuple(spec)
    check_spec(spec)
    params = NetParams(spec)
    for layer, w in zip(spec, params.weights):
        bound = 1.0 / np.sqrt(layer.in_dim)
        w[...] = rng.uniform(-bound, bound, size=(layer.out_dim, layer.in_dim))
    return params


def _sigmoid(z):
    # tanh form is overflow-free
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _activate(z, act):
    if act is Activation.RELU:
        return np.maximum(z, 0.0)
    if act is Activation.SIGMOID:
        return _sigmoid(z)
    return z


@dataclass
class Cache:
    spec: tuple[LayerSpec, ...]
    inputs: list[np.ndarray]  # input to each layer
    outputs: list[np.ndarray]  # post-activation output of each layer
    pre: list[np.ndarray]
    squeeze: bool


def forward(params: NetParams, x) -> tuple[np.ndarray, Cache]:
    x = np.asarray(x, dtype=float)
    squeeze = x.ndim == 1
    a = x[None, :] if squeeze else x
    if not params.spec or a.shape[1] != params.spec[0].in_dim:
        expected = params.spec[0].in_dim if params.spec else 0
        raise ContractError(f"input width {a.shape[-1]} does not match network input {expected}")
    inputs, outputs, pre = [], [], []
    for layer, w, b in zip(params.spec, params.weights, params.biases):
        inputs.append(a)
        z = a @ w.T + b
        a = _activate(z, layer.activation)
        pre.append(z)
        outputs.append(a)
    y = a[0] if squeeze else a
    return y, Cache(params.spec, inputs, outputs, pre, squeeze)


def predict(params: NetParams, x) -> np.ndarray:
    """Forward pass without keeping a cache."""
    x = np.asarray(x, dtype=float)
    a = x[None, :] if x.ndim == 1 else x
    if a.shape[1] != params.spec[0].in_dim:
        raise ContractError(f"input width {a.shape[1]} does not match network input {params.spec[0].in_dim}")
    for layer, w, b in zip(params.spec, params.weights, params.biases):
        a = _activate(a @ w.T + b, layer.activation)
    return a[0] if x.ndim == 1 else a


def backward(params: NetParams, cache: Cache, output_gradient) -> tuple[NetParams, np.ndarray]:
    """Gradients of sum(output * output_gradient) w.r.t. parameters and input."""
    if cache.spec != params.spec or len(cache.inputs) != len(params.weights):
        raise ContractError("cache does not belong to these parameters")
    g = np.asarray(output_gradient, dtype=float)
    if cache.squeeze:
        g = g[None, :]
    if g.shape != cache.outputs[-1].shape:
        raise ContractError(f"output gradient shape {g.shape} != output shape {cache.outputs[-1].shape}")
    grads = NetParams(params.spec)
    for i in range(len(params.weights) - 1, -1, -1):
        act = params.spec[i].activation
        if act is Activation.RELU:
            g = g * (cache.pre[i] > 0.0)
        elif act is Activation.SIGMOID:
            s = cache.outputs[i]
            g = g * s * (1.0 - s)
        np.matmul(g.T, cache.inputs[i], out=grads.weights[i])
        g.sum(axis=0, out=grads.biases[i])
        g = g @ params.weights[i]
    grad_in = g[0] if cache.squeeze else g
    return grads, grad_in


def global_norm(grads: NetParams) -> float:
    return float(np.sqrt(grads.data @ grads.data))


def clip_by_global_norm(grads: NetParams, max_norm: float) -> NetParams:
    norm = global_norm(grads)
    if norm <= max_norm or norm == 0.0:
        return grads
    return NetParams(grads.spec, grads.data * (max_norm / norm))


def mse_loss(pred, target) -> tuple[float, np.ndarray]:
    """Mean squared error and its gradient w.r.t. ``pred``."""
    diff = np.asarray(pred, dtype=float) - np.asarray(target, dtype=float)
    n = diff.shape[0]
    return float(np.mean(diff * diff)), 2.0 * diff / n


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros(cls, params: NetParams, beta1=0.9, beta2=0.999, eps=1e-8) -> "AdamState":
        return cls(np.zeros(params.n_params), np.zeros(params.n_params), 0, beta1, beta2, eps)


def adam_step(params: NetParams, grads: NetParams, state: AdamState, lr: float) -> None:
    """In-place Adam update of ``params`` and ``state`` with bias correction."""
    if grads.spec != params.spec:
        raise ContractError("gradient layout does not match parameters")
    g = grads.data
    if not np.isfinite(g @ g):
        raise FloatingPointError("non-finite gradient passed to adam_step")
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** state.step
    c2 = 1.0 - b2 ** state.step
    state.m *= b1
    state.m += (1.0 - b1) * g
    state.v *= b2
    state.v += (1.0 - b2) * (g * g)
    params.data -= lr * (state.m / c1) / (np.sqrt(state.v / c2) + state.eps)


def soft_update(target: NetParams, online: NetParams, tau: float) -> NetParams:
    if target.spec != online.spec:
        raise ContractError("soft_update needs matching architectures")
    if not 0.0 <= tau <= 1.0:
        raise ContractError(f"tau must be in [0, 1], got {tau}")
    return NetParams(target.spec, tau * online.data + (1.0 - tau) * target.data)


def flatten(params: NetParams) -> np.ndarray:
    return params.data.copy()


def unflatten(spec, flat) -> NetParams:
    spec = tuple(spec)
    check_spec(spec)
    flat = np.asarray(flat, dtype=float)
    if flat.ndim != 1 or flat.size != spec_param_count(spec):
        raise ContractError(f"flat vector of length {flat.size} does not fit {spec_param_count(spec)} parameters")
    return NetParams(spec, flat.copy())
