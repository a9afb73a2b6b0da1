"""Dense network stack: tanh MLPs, analytic backprop, Adam, LR decay.

Everything is float64 numpy; the networks here are small enough that
reproducibility is worth more than speed.  Parameters are ordered
[W0, b0, W1, b1, ...] wherever a flat list is exchanged.
"""

from __future__ import annotations

import base64
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .schemas import SchemaError, canonical_json, check_schema

CHECKPOINT_SCHEMA = "checkpoint/1"

HIDDEN_WIDTH = 64


@dataclass
class Mlp:
    """Two hidden tanh layers of width 64; linear output."""

    sizes: tuple[int, ...]
    weights: list[np.ndarray]  # per layer, shape (fan_in, fan_out)
    biases: list[np.ndarray]

    @property
    def n_params(self) -> int:
        return sum(w.size for w in self.weights) + sum(b.size for b in self.biases)

    def params(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out


def orthogonal(rng: np.random.Generator, fan_in: int, fan_out: int, gain: float) -> np.ndarray:
    """Orthogonal init (sign-fixed QR of a Gaussian), scaled by gain."""
    flat = rng.standard_normal((max(fan_in, fan_out), min(fan_in, fan_out)))
    q, r = np.linalg.qr(flat)
    q = q * np.sign(np.diag(r))
    if fan_in < fan_out:
        q = q.T
    return np.ascontiguousarray(gain * q[:fan_in, :fan_out])


def make_mlp(
    n_in: int,
    n_out: int,
    rng: np.random.Generator,
    out_gain: float = 1.0,
    hidden: tuple[int, ...] = (HIDDEN_WIDTH, HIDDEN_WIDTH),
) -> Mlp:
    sizes = (n_in, *hidden, n_out)
    weights, biases = [], []
    for i in range(len(sizes) - 1):
        gain = np.sqrt(2.0) if i < len(sizes) - 2 else out_gain
        weights.append(orthogonal(rng, sizes[i], sizes[i + 1], gain))
        biases.append(np.zeros(sizes[i + 1]))
    return Mlp(sizes=sizes, weights=weights, biases=biases)


def forward(net: Mlp, x: np.ndarray) -> np.ndarray:
    """Batched forward pass; accepts (B, n_in) or a single (n_in,) vector."""
    single = x.ndim == 1
    a = np.atleast_2d(x)
    if a.shape[1] != net.sizes[0]:
        raise ValueError(f"input width {a.shape[1]} != {net.sizes[0]}")
    last = len(net.weights) - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        a = a @ w + b
        if i < last:
            a = np.tanh(a)
    return a[0] if single else a


def backward(
    net: Mlp, x: np.ndarray, upstream: np.ndarray
) -> tuple[list[np.ndarray], np.ndarray]:
    """Exact gradients of sum(upstream * forward(net, x)).

    Returns (param gradients ordered like net.params(), input gradient).
    """
    single = x.ndim == 1
    a = np.atleast_2d(x)
    g = np.atleast_2d(upstream)
    if g.shape[-1] != net.sizes[-1]:
        raise ValueError(f"upstream width {g.shape[-1]} != {net.sizes[-1]}")
    last = len(net.weights) - 1
    activations = [a]
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        a = a @ w + b
        if i < last:
            a = np.tanh(a)
        activations.append(a)
    grads: list[np.ndarray] = [np.empty(0)] * (2 * len(net.weights))
    delta = g
    for i in range(last, -1, -1):
        if i < last:
            delta = delta * (1.0 - activations[i + 1] ** 2)
        grads[2 * i] = activations[i].T @ delta
        grads[2 * i + 1] = delta.sum(axis=0)
        delta = delta @ net.weights[i].T
    dx = delta[0] if single else delta
    return grads, dx


@dataclass
class AdamState:
    """Per-parameter moment accumulators mirroring a params() list."""

    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params: list[np.ndarray]) -> "AdamState":
        return cls(
            m=[np.zeros_like(p) for p in params],
            v=[np.zeros_like(p) for p in params],
        )


def adam_update(
    params: list[np.ndarray],
    grads: list[np.ndarray],
    state: AdamState,
    lr: float,
) -> None:
    """Bias-corrected Adam step, applied to params in place."""
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ValueError("params/grads/state length mismatch")
    for i, g in enumerate(grads):
        if not np.all(np.isfinite(g)):
            raise ValueError(f"non-finite gradient for parameter {i}")
    state.t += 1
    b1c = 1.0 - state.beta1**state.t
    b2c = 1.0 - state.beta2**state.t
    for i, (p, g) in enumerate(zip(params, grads)):
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g
        m_hat = state.m[i] / b1c
        v_hat = state.v[i] / b2c
        p -= lr * m_hat / (np.sqrt(v_hat) + state.eps)


@dataclass(frozen=True)
class LrSchedule:
    """Linear decay to zero over a fixed number of update phases."""

    initial_lr: float = 3e-4
    total_updates: int = 1

    def lr_at(self, update_index: int) -> float:
        if update_index < 0:
            raise ValueError("update index must be >= 0")
        return self.initial_lr * max(0.0, 1.0 - update_index / self.total_updates)


def clip_grad_norm(grads: list[np.ndarray], max_norm: float) -> float:
    """Scale gradients in place to a maximum global L2 norm; returns the norm."""
    total = float(np.sqrt(sum(float(np.sum(g * g)) for g in grads)))
    if max_norm > 0 and total > max_norm:
        scale = max_norm / (total + 1e-12)
        for g in grads:
            g *= scale
    return total


# -- checkpoint files -------------------------------------------------------


def _encode(arr: np.ndarray) -> dict:
    data = np.ascontiguousarray(arr, dtype=np.float64)
    return {
        "shape": list(data.shape),
        "data": base64.b64encode(data.tobytes()).decode("ascii"),
    }


def _decode(doc: dict) -> np.ndarray:
    raw = base64.b64decode(doc["data"])
    return np.frombuffer(raw, dtype=np.float64).reshape(doc["shape"]).copy()


def _net_to_dict(net: Mlp) -> dict:
    return {
        "sizes": list(net.sizes),
        "weights": [_encode(w) for w in net.weights],
        "biases": [_encode(b) for b in net.biases],
    }


def _net_from_dict(doc: dict) -> Mlp:
    net = Mlp(
        sizes=tuple(doc["sizes"]),
        weights=[_decode(w) for w in doc["weights"]],
        biases=[_decode(b) for b in doc["biases"]],
    )
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        if w.shape != (net.sizes[i], net.sizes[i + 1]) or b.shape != (net.sizes[i + 1],):
            raise SchemaError(f"checkpoint: layer {i} shape mismatch")
    return net


def _adam_to_dict(state: AdamState) -> dict:
    return {
        "m": [_encode(a) for a in state.m],
        "v": [_encode(a) for a in state.v],
        "t": state.t,
        "beta1": state.beta1,
        "beta2": state.beta2,
        "eps": state.eps,
    }


def _adam_from_dict(doc: dict) -> AdamState:
    return AdamState(
        m=[_decode(a) for a in doc["m"]],
        v=[_decode(a) for a in doc["v"]],
        t=int(doc["t"]),
        beta1=float(doc["beta1"]),
        beta2=float(doc["beta2"]),
        eps=float(doc["eps"]),
    )


def config_hash(config: dict) -> str:
    return hashlib.sha256(canonical_json(config).encode("utf-8")).hexdigest()


@dataclass
class Checkpoint:
    policy: Mlp
    value: Mlp
    adam_policy: AdamState
    adam_value: AdamState
    updates_done: int
    samples_done: int
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "schema": CHECKPOINT_SCHEMA,
            "policy": _net_to_dict(self.policy),
            "value": _net_to_dict(self.value),
            "adam_policy": _adam_to_dict(self.adam_policy),
            "adam_value": _adam_to_dict(self.adam_value),
            "updates_done": self.updates_done,
            "samples_done": self.samples_done,
            "config": self.config,
            "config_hash": config_hash(self.config),
        }

    @classmethod
    def from_dict(cls, doc: dict, where: str = "checkpoint") -> "Checkpoint":
        check_schema(doc, CHECKPOINT_SCHEMA, where)
        if doc.get("config_hash") != config_hash(doc.get("config", {})):
            raise SchemaError(f"{where}: config hash does not match stored config")
        return cls(
            policy=_net_from_dict(doc["policy"]),
            value=_net_from_dict(doc["value"]),
            adam_policy=_adam_from_dict(doc["adam_policy"]),
            adam_value=_adam_from_dict(doc["adam_value"]),
            updates_done=int(doc["updates_done"]),
            samples_done=int(doc["samples_done"]),
            config=doc.get("config", {}),
        )


def save_checkpoint(ckpt: Checkpoint, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(canonical_json(ckpt.to_dict()), encoding="utf-8")


def load_checkpoint(path) -> Checkpoint:
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"{path}: file not found")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc})") from exc
    return Checkpoint.from_dict(doc, where=str(path))
