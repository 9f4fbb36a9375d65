"""Recurrent winner-take-all network topology.

Neurons are laid out as [hidden circuits | action circuit | state neurons],
so the first ``n_h * d_h + d_a`` indices form the trainable "ha" block that
the inference and gradient code selects with a plain prefix slice.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class InvalidShapeError(ValueError):
    """Raised for non-positive dimensions or inconsistent mask shapes."""


@dataclass(frozen=True)
class NetworkShape:
    """Neuron counts: d_s state inputs, n_h hidden circuits of d_h neurons,
    d_a action neurons."""

    d_s: int
    n_h: int
    d_h: int
    d_a: int

    def __post_init__(self):
        for name in ("d_s", "n_h", "d_h", "d_a"):
            if getattr(self, name) < 1:
                raise InvalidShapeError(f"{name} must be >= 1, got {getattr(self, name)}")

    @property
    def n_hidden(self) -> int:
        return self.n_h * self.d_h

    @property
    def n_ha(self) -> int:
        """Size of the trainable hidden+action prefix."""
        return self.n_h * self.d_h + self.d_a

    @property
    def N(self) -> int:
        return self.n_ha + self.d_s


@dataclass(frozen=True)
class CircuitIndex:
    """Circuit membership bookkeeping for a fixed :class:`NetworkShape`.

    Hidden circuits come first (ids 0..n_h-1), then the action circuit
    (id n_h), then one singleton circuit per clamped state neuron.
    """

    shape: NetworkShape
    circuit_id: np.ndarray = field(repr=False)
    ha_starts: np.ndarray = field(repr=False)  # reduceat offsets of the ha circuits

    @property
    def hidden(self) -> slice:
        return slice(0, self.shape.n_hidden)

    @property
    def action(self) -> slice:
        return slice(self.shape.n_hidden, self.shape.n_ha)

    @property
    def ha(self) -> slice:
        return slice(0, self.shape.n_ha)

    @property
    def state(self) -> slice:
        return slice(self.shape.n_ha, self.shape.N)

    def members(self, i: int) -> np.ndarray:
        """Indices of the circuit containing neuron i (includes i itself)."""
        s = self.shape
        if i < s.n_hidden:
            c = i // s.d_h
            return np.arange(c * s.d_h, (c + 1) * s.d_h)
        if i < s.n_ha:
            return np.arange(s.n_hidden, s.n_ha)
        return np.array([i])

    def ha_circuits(self) -> list[np.ndarray]:
        """Member index arrays of the hidden and action circuits, in order."""
        s = self.shape
        out = [np.arange(c * s.d_h, (c + 1) * s.d_h) for c in range(s.n_h)]
        out.append(np.arange(s.n_hidden, s.n_ha))
        return out

    def g_ha(self) -> np.ndarray:
        """(n_ha, N) logical matrix: entry (i, j) = 1 iff j is in i's circuit."""
        s = self.shape
        same = self.circuit_id[: s.n_ha, None] == self.circuit_id[None, :]
        return same.astype(np.float64)

    def d_sel(self) -> np.ndarray:
        """(n_ha, N) selector of the hidden+action prefix: [I | 0]."""
        s = self.shape
        out = np.zeros((s.n_ha, s.N))
        out[np.arange(s.n_ha), np.arange(s.n_ha)] = 1.0
        return out


def build_shape(d_s: int, n_h: int, d_h: int, d_a: int) -> tuple[NetworkShape, CircuitIndex]:
    """Validate dimensions and build the neuron/circuit layout."""
    shape = NetworkShape(d_s=d_s, n_h=n_h, d_h=d_h, d_a=d_a)
    circuit_id = np.empty(shape.N, dtype=np.int64)
    circuit_id[: shape.n_hidden] = np.arange(shape.n_hidden) // d_h
    circuit_id[shape.n_hidden : shape.n_ha] = n_h
    circuit_id[shape.n_ha :] = n_h + 1 + np.arange(d_s)
    ha_starts = np.append(np.arange(n_h) * d_h, shape.n_hidden).astype(np.intp)
    return shape, CircuitIndex(shape=shape, circuit_id=circuit_id, ha_starts=ha_starts)


def default_mask(index: CircuitIndex) -> np.ndarray:
    """Admissible-synapse mask: fully connected state<->hidden, hidden<->hidden
    across circuits, and hidden<->action; no self loops, no intra-circuit
    synapses, no state<->state, no state<->action."""
    s = index.shape
    cid = index.circuit_id
    is_state = np.zeros(s.N, dtype=bool)
    is_state[s.n_ha :] = True
    is_action = np.zeros(s.N, dtype=bool)
    is_action[s.n_hidden : s.n_ha] = True

    diff_circuit = cid[:, None] != cid[None, :]
    state_state = is_state[:, None] & is_state[None, :]
    state_action = (is_state[:, None] & is_action[None, :]) | (is_action[:, None] & is_state[None, :])
    mask = diff_circuit & ~state_state & ~state_action
    return mask.astype(np.float64)


def apply_mask(w: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Project a weight matrix onto the admissible synapse pattern."""
    return w * mask


@dataclass
class RwtaParams:
    """Learnable parameters: full synapse matrix W (stored unsymmetrized; every
    formula uses w_row + w_col), self-activation vector b, and the structural
    mask. Masked entries of W stay exactly zero."""

    W: np.ndarray
    b: np.ndarray
    mask: np.ndarray
    index: CircuitIndex

    def copy(self) -> "RwtaParams":
        return RwtaParams(W=self.W.copy(), b=self.b.copy(), mask=self.mask, index=self.index)

    def w_symmetric(self) -> np.ndarray:
        return self.W + self.W.T


def init_params(
    index: CircuitIndex,
    mask: np.ndarray | None = None,
    rng_seed: int = 0,
    init_scale: float = 0.01,
) -> RwtaParams:
    """Initialize W with i.i.d. uniform(-init_scale, init_scale) entries on the
    admissible synapses and b = 0. Reproducible from the seed."""
    n = index.shape.N
    if mask is None:
        mask = default_mask(index)
    if mask.shape != (n, n):
        raise InvalidShapeError(f"mask shape {mask.shape} does not match N={n}")
    if not np.array_equal(mask, mask.T):
        raise InvalidShapeError("mask must be symmetric")
    if not np.isin(mask, (0.0, 1.0)).all():
        raise InvalidShapeError("mask must be binary")
    rng = np.random.default_rng(rng_seed)
    w = rng.uniform(-init_scale, init_scale, size=(n, n)) * mask
    return RwtaParams(W=w, b=np.zeros(n), mask=mask, index=index)
