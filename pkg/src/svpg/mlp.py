"""Minimal dense feedforward network with reverse-mode gradients.

Serves two roles: the per-action value critic in the actor-critic loop, and
the conventional backprop baseline the robustness sweeps compare against.
ReLU hidden layers; the output head is either the identity (critic) or a
softmax (policy baseline).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class DenseNet:
    sizes: tuple[int, ...]
    head: str  # "identity" | "softmax"
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def parameter_arrays(self) -> list[np.ndarray]:
        out: list[np.ndarray] = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out


def init_dense(sizes, head: str = "identity", rng: np.random.Generator | None = None) -> DenseNet:
    """Glorot-uniform weights, zero biases, reproducible from the generator."""
    if head not in ("identity", "softmax"):
        raise ValueError(f"unknown head {head!r}")
    if rng is None:
        rng = np.random.default_rng(0)
    weights, biases = [], []
    for nin, nout in zip(sizes[:-1], sizes[1:]):
        limit = np.sqrt(6.0 / (nin + nout))
        weights.append(rng.uniform(-limit, limit, size=(nout, nin)))
        biases.append(np.zeros(nout))
    return DenseNet(sizes=tuple(sizes), head=head, weights=weights, biases=biases)


def forward(net: DenseNet, x: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
    """Run the network on a (d,) vector or (B, d) batch.

    Returns the head output and the cached layer activations (inputs to each
    layer, pre-head logits last) needed by :func:`backward`.
    """
    single = x.ndim == 1
    a = np.atleast_2d(np.asarray(x, dtype=np.float64))
    cache = [a]
    n_layers = len(net.weights)
    for k, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = a @ w.T + b
        if k < n_layers - 1:
            a = np.maximum(z, 0.0)
        else:
            a = z
        cache.append(a)
    out = _apply_head(net.head, a)
    if single:
        return out[0], cache
    return out, cache


def _apply_head(head: str, logits: np.ndarray) -> np.ndarray:
    if head == "identity":
        return logits
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def backward(net: DenseNet, cache: list[np.ndarray], dlogits: np.ndarray):
    """Exact reverse-mode gradients given the upstream gradient on the
    pre-head logits (for softmax + log-likelihood that is p - onehot).

    Returns (weight_grads, bias_grads) matching the network's layers.
    """
    dlogits = np.atleast_2d(np.asarray(dlogits, dtype=np.float64))
    if dlogits.shape != cache[-1].shape:
        raise ValueError(f"upstream shape {dlogits.shape} != logits shape {cache[-1].shape}")
    weight_grads = [np.zeros_like(w) for w in net.weights]
    bias_grads = [np.zeros_like(b) for b in net.biases]
    delta = dlogits
    for k in range(len(net.weights) - 1, -1, -1):
        a_in = cache[k]
        weight_grads[k] = delta.T @ a_in
        bias_grads[k] = delta.sum(axis=0)
        if k > 0:
            delta = (delta @ net.weights[k]) * (cache[k] > 0.0)
    return weight_grads, bias_grads


def sgd_step(net: DenseNet, grads, lr: float) -> None:
    """In-place gradient-descent update."""
    weight_grads, bias_grads = grads
    for w, gw in zip(net.weights, weight_grads):
        w -= lr * gw
    for b, gb in zip(net.biases, bias_grads):
        b -= lr * gb


@dataclass
class RmspropState:
    """Per-parameter second-moment accumulators."""

    acc: list[np.ndarray] = field(default_factory=list)

    @classmethod
    def for_arrays(cls, arrays) -> "RmspropState":
        return cls(acc=[np.zeros_like(a) for a in arrays])


def rmsprop_update(params_list, grads_list, state: RmspropState, lr: float,
                   decay: float = 0.99, eps: float = 1e-8) -> None:
    """Generic RMSprop over a flat list of parameter arrays (in place)."""
    for p, g, acc in zip(params_list, grads_list, state.acc):
        acc *= decay
        acc += (1.0 - decay) * g * g
        p -= lr * g / (np.sqrt(acc) + eps)


def rmsprop_step(net: DenseNet, grads, state: RmspropState, lr: float,
                 decay: float = 0.99, eps: float = 1e-8) -> None:
    """RMSprop update of a dense net (in place)."""
    weight_grads, bias_grads = grads
    flat_grads = []
    for gw, gb in zip(weight_grads, bias_grads):
        flat_grads.append(gw)
        flat_grads.append(gb)
    rmsprop_update(net.parameter_arrays(), flat_grads, state, lr, decay, eps)
