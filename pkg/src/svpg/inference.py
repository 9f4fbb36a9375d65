"""Rate-coded policy inference.

The policy is an energy model over one-hot circuit states; its mean-field
approximation is a per-circuit categorical distribution q that satisfies a
softmax fixed-point equation in the symmetrized weights.  Inference clamps the
state neurons and iterates that equation synchronously until the hidden and
action probabilities stop moving.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .topology import CircuitIndex, RwtaParams


class EncodingError(ValueError):
    """State vector outside the [0, 1] encoding range."""


class NumericError(FloatingPointError):
    """Non-finite value produced during inference."""


@dataclass
class FiringState:
    """Firing probabilities q (length N) and, once sampled, binary firing
    statuses v (one-hot per hidden/action circuit, Bernoulli per state
    neuron)."""

    q: np.ndarray
    v: np.ndarray | None = None

    def copy(self) -> "FiringState":
        return FiringState(q=self.q.copy(), v=None if self.v is None else self.v.copy())


@dataclass
class InferenceConfig:
    max_iters: int = 100
    tol: float = 1e-6
    rate_noise_std: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.tol < 0 or self.rate_noise_std < 0:
            raise ValueError("tol and rate_noise_std must be nonnegative")


@dataclass
class InferenceResult:
    state: FiringState
    iterations: int
    converged: bool


def circuit_softmax(index: CircuitIndex, logits: np.ndarray) -> np.ndarray:
    """Per-circuit softmax over the ha block, stabilized by max subtraction.

    ``logits`` has the ha neurons on its last axis; leading axes are batch.
    """
    starts = index.ha_starts
    top = np.maximum.reduceat(logits, starts, axis=-1)
    shifted = logits - np.repeat(top, np.diff(np.append(starts, logits.shape[-1])), axis=-1)
    e = np.exp(shifted)
    z = np.add.reduceat(e, starts, axis=-1)
    return e / np.repeat(z, np.diff(np.append(starts, logits.shape[-1])), axis=-1)


def clamp_state(index: CircuitIndex, s: np.ndarray, rng: np.random.Generator) -> FiringState:
    """Clamp the state neurons to the encoded observation and randomly
    initialize the hidden/action probabilities (uniform draws, normalized per
    circuit)."""
    s = np.asarray(s, dtype=np.float64)
    if s.shape != (index.shape.d_s,):
        raise EncodingError(f"state must have shape ({index.shape.d_s},), got {s.shape}")
    if (s < 0).any() or (s > 1).any():
        bad = int(np.argmax((s < 0) | (s > 1)))
        raise EncodingError(f"state component {bad} = {s[bad]} outside [0, 1]")
    q = np.empty(index.shape.N)
    q[index.state] = s
    raw = rng.uniform(size=index.shape.n_ha)
    q[index.ha] = _normalize_ha(index, raw)
    return FiringState(q=q)


def _normalize_ha(index: CircuitIndex, q_ha: np.ndarray) -> np.ndarray:
    """Renormalize the ha block per circuit; an all-zero circuit becomes uniform."""
    starts = index.ha_starts
    sizes = np.diff(np.append(starts, index.shape.n_ha))
    z = np.add.reduceat(q_ha, starts, axis=-1)
    uniform = np.repeat(1.0 / sizes, sizes)
    zrep = np.repeat(z, sizes, axis=-1)
    out = np.where(zrep > 0.0, q_ha / np.where(zrep > 0.0, zrep, 1.0), uniform)
    return out


def ha_logits(params: RwtaParams, q: np.ndarray) -> np.ndarray:
    """Mean-field logits of the hidden/action neurons: (W + W^T) q + b."""
    n_ha = params.index.shape.n_ha
    wsym_ha = params.W[:n_ha, :] + params.W[:, :n_ha].T
    return wsym_ha @ q + params.b[:n_ha]


def mean_field_step(params: RwtaParams, state: FiringState) -> FiringState:
    """One synchronous fixed-point update: every ha neuron's probability is
    recomputed from the old q; state probabilities never move."""
    index = params.index
    logits = ha_logits(params, state.q)
    if not np.isfinite(logits).all():
        bad = int(np.argmax(~np.isfinite(logits)))
        raise NumericError(f"non-finite logit at neuron {bad}")
    q = state.q.copy()
    q[index.ha] = circuit_softmax(index, logits)
    return FiringState(q=q, v=state.v)


def infer_fixed_point(
    params: RwtaParams,
    s: np.ndarray,
    cfg: InferenceConfig,
    rng: np.random.Generator | None = None,
    q0: np.ndarray | None = None,
) -> InferenceResult:
    """Iterate the mean-field update from a random (or supplied) start until
    the max-abs change of the ha block drops to ``cfg.tol`` or ``max_iters``
    is hit.  Non-convergence is reported through the flag, not an error.

    With ``rate_noise_std > 0``, Gaussian noise is injected into the ha block
    after every iteration, then clipped to [0, 1] and renormalized per
    circuit, mimicking spike-train estimation jitter.
    """
    index = params.index
    if rng is None:
        rng = np.random.default_rng(cfg.rng_seed)
    if q0 is not None:
        state = FiringState(q=q0.copy())
    else:
        state = clamp_state(index, s, rng)

    converged = False
    iterations = 0
    for iterations in range(1, cfg.max_iters + 1):
        new = mean_field_step(params, state)
        if cfg.rate_noise_std > 0:
            noisy = new.q[index.ha] + rng.normal(0.0, cfg.rate_noise_std, size=index.shape.n_ha)
            new.q[index.ha] = _normalize_ha(index, np.clip(noisy, 0.0, 1.0))
        delta = np.max(np.abs(new.q[index.ha] - state.q[index.ha]))
        state = new
        if delta <= cfg.tol:
            converged = True
            break
    return InferenceResult(state=state, iterations=iterations, converged=converged)


def sample_firing(state: FiringState, index: CircuitIndex, rng: np.random.Generator) -> FiringState:
    """Draw firing statuses: one categorical winner per hidden/action circuit,
    independent Bernoulli draws for the state neurons."""
    v = np.zeros(index.shape.N)
    for circuit in index.ha_circuits():
        p = state.q[circuit]
        winner = _categorical(p / p.sum(), rng)
        v[circuit[winner]] = 1.0
    q_s = state.q[index.state]
    v[index.state] = (rng.uniform(size=q_s.size) < q_s).astype(np.float64)
    return FiringState(q=state.q, v=v)


def _categorical(p: np.ndarray, rng: np.random.Generator) -> int:
    u = rng.uniform()
    return int(np.searchsorted(np.cumsum(p), u, side="right").clip(0, p.size - 1))


def action_distribution(state: FiringState, index: CircuitIndex) -> np.ndarray:
    """Marginal action probabilities of the (converged) state."""
    return state.q[index.action].copy()


# Batched inference over a stack of observations.  Mathematically identical to
# looping infer_fixed_point, but hoists the symmetrized-weight blocks and the
# state contribution out of the iteration, which is what makes image-batch
# training tractable.

def infer_fixed_point_batch(
    params: RwtaParams,
    states: np.ndarray,
    cfg: InferenceConfig,
    rng: np.random.Generator,
    q0: np.ndarray | None = None,
) -> tuple[np.ndarray, int, bool]:
    """Run inference for a (B, d_s) batch; returns (Q of shape (B, N),
    iterations, all_converged).  The iteration stops when every row's ha
    change is within tol."""
    index = params.index
    shape = index.shape
    states = np.asarray(states, dtype=np.float64)
    if states.ndim != 2 or states.shape[1] != shape.d_s:
        raise EncodingError(f"states must have shape (B, {shape.d_s})")
    if (states < 0).any() or (states > 1).any():
        raise EncodingError("state component outside [0, 1]")
    b_size = states.shape[0]
    n_ha = shape.n_ha

    wsym_haha = params.W[:n_ha, :n_ha] + params.W[:n_ha, :n_ha].T
    wsym_has = params.W[:n_ha, n_ha:] + params.W[n_ha:, :n_ha].T
    state_logits = states @ wsym_has.T + params.b[:n_ha]

    if q0 is None:
        q_ha = _normalize_ha(index, rng.uniform(size=(b_size, n_ha)))
    else:
        q_ha = q0[:, :n_ha].copy()

    converged = False
    iterations = 0
    for iterations in range(1, cfg.max_iters + 1):
        logits = q_ha @ wsym_haha.T + state_logits
        if not np.isfinite(logits).all():
            raise NumericError("non-finite logit in batched inference")
        new = circuit_softmax(index, logits)
        if cfg.rate_noise_std > 0:
            new = new + rng.normal(0.0, cfg.rate_noise_std, size=new.shape)
            new = _normalize_ha(index, np.clip(new, 0.0, 1.0))
        delta = np.max(np.abs(new - q_ha))
        q_ha = new
        if delta <= cfg.tol:
            converged = True
            break
    q = np.concatenate([q_ha, states], axis=1)
    return q, iterations, converged


def sample_firing_batch(q: np.ndarray, index: CircuitIndex, rng: np.random.Generator) -> np.ndarray:
    """Vectorized firing draw for a (B, N) probability stack."""
    b_size = q.shape[0]
    v = np.zeros_like(q)
    for circuit in index.ha_circuits():
        p = q[:, circuit]
        cum = np.cumsum(p, axis=1)
        cum /= cum[:, -1:]
        u = rng.uniform(size=(b_size, 1))
        winner = (u > cum).sum(axis=1).clip(0, circuit.size - 1)
        v[np.arange(b_size), circuit[winner]] = 1.0
    q_s = q[:, index.state]
    v[:, index.state] = (rng.uniform(size=q_s.shape) < q_s).astype(np.float64)
    return v
