"""Spike-coded inference.

One RL step is simulated as L discrete spike steps.  Each neuron accumulates a
membrane potential from kernel-filtered presynaptic spike trains; each
winner-take-all circuit then fires at most one neuron per step, with the
overall circuit rate pinned to rho_hat and the winner chosen by a softmax of
the potentials.  Long-run spike counts divided by rho_hat * L recover the
rate-coded firing probabilities, which is what couples this module to the
mean-field path.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .inference import FiringState
from .topology import CircuitIndex, RwtaParams

# Binary (N, L) spike matrix; S[i, l] = 1 iff neuron i fired at spike step l.
SpikeTrain = np.ndarray


@dataclass(frozen=True)
class KernelConfig:
    """Postsynaptic kernel shape: 'rectangle' uses width, 'double_exponential'
    uses (tau_rise, tau_fall)."""

    kind: str = "rectangle"
    width: float = 10.0
    tau_rise: float = 1.0
    tau_fall: float = 5.0

    def __post_init__(self):
        if self.kind not in ("rectangle", "double_exponential"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "rectangle" and self.width <= 0:
            raise ValueError("rectangle width must be positive")
        if self.kind == "double_exponential" and self.tau_rise >= self.tau_fall:
            raise ValueError("double exponential needs tau_rise < tau_fall")


@dataclass(frozen=True)
class SpikeSimConfig:
    L: int = 1000
    rho_hat: float = 0.5
    kernel: KernelConfig = field(default_factory=KernelConfig)
    dt: float = 1.0
    horizon: int = 50  # lags beyond this contribute nothing

    def __post_init__(self):
        if self.L < 1:
            raise ValueError("L must be >= 1")
        if not 0 < self.rho_hat <= 1:
            raise ValueError("rho_hat must be in (0, 1]")
        if self.kernel.kind == "rectangle" and self.horizon < self.kernel.width:
            raise ValueError("horizon must cover the rectangle width")


def kernel_eval(cfg: SpikeSimConfig, y: float) -> float:
    """Pointwise kernel value at elapsed time y >= 0.

    The rectangle is 1 / (rho_hat * width) on [0, width); the double
    exponential is c * (exp(-y/tau_fall) - exp(-y/tau_rise)) with c calibrated
    so the discretized kernel carries total mass 1 / rho_hat.
    """
    if y < 0:
        raise ValueError("kernel lag must be nonnegative")
    k = cfg.kernel
    if k.kind == "rectangle":
        return 1.0 / (cfg.rho_hat * k.width) if y < k.width else 0.0
    if y >= cfg.horizon:
        return 0.0
    return _dexp_scale(cfg) * (np.exp(-y / k.tau_fall) - np.exp(-y / k.tau_rise))


def _dexp_scale(cfg: SpikeSimConfig) -> float:
    k = cfg.kernel
    ys = np.arange(cfg.horizon, dtype=np.float64)
    raw = np.exp(-ys / k.tau_fall) - np.exp(-ys / k.tau_rise)
    return 1.0 / (cfg.rho_hat * cfg.dt * raw.sum())


def discrete_kernel(cfg: SpikeSimConfig) -> np.ndarray:
    """Filter taps over lags 1..horizon: entry k weights a spike fired k+1
    steps ago, using the kernel value at elapsed time k.  Total mass is
    exactly 1 / rho_hat, the normalization that makes long-run potentials
    estimate (W + W^T) q + b."""
    return np.array([kernel_eval(cfg, float(k)) for k in range(cfg.horizon)])


def potential_update(params: RwtaParams, trains: SpikeTrain, l: int, cfg: SpikeSimConfig) -> np.ndarray:
    """Membrane potentials at spike step l from the history trains[:, :l]:
    u = (W + W^T) (kernel-filtered spike history) + b.  Steps before 0 are an
    empty history."""
    if l >= trains.shape[1]:
        raise ValueError(f"step {l} out of range for L={trains.shape[1]}")
    filt = discrete_kernel(cfg)
    h = filtered_history(trains, l, filt)
    return params.w_symmetric() @ h + params.b


def filtered_history(trains: SpikeTrain, l: int, filt: np.ndarray) -> np.ndarray:
    """Per-neuron kernel-filtered spike history entering step l."""
    depth = min(l, filt.size)
    if depth == 0:
        return np.zeros(trains.shape[0])
    window = trains[:, l - depth : l].astype(np.float64)
    return window @ filt[:depth][::-1]


def spike_step(
    u: np.ndarray,
    index: CircuitIndex,
    rho_hat: float,
    q_s: np.ndarray,
    rng: np.random.Generator,
) -> np.ndarray:
    """Fire at most one neuron per hidden/action circuit: with probability
    rho_hat the circuit emits a spike, and the winner is drawn from the
    softmax of the potentials.  State neurons spike i.i.d. at rate
    rho_hat * q_s."""
    fired = np.zeros(index.shape.N, dtype=np.uint8)
    for circuit in index.ha_circuits():
        if rng.uniform() >= rho_hat:
            continue
        z = u[circuit] - u[circuit].max()
        p = np.exp(z)
        p /= p.sum()
        winner = int(np.searchsorted(np.cumsum(p), rng.uniform(), side="right").clip(0, circuit.size - 1))
        fired[circuit[winner]] = 1
    fired[index.state] = rng.uniform(size=q_s.size) < rho_hat * q_s
    return fired


def run_spike_inference(
    params: RwtaParams,
    s: np.ndarray,
    cfg: SpikeSimConfig,
    rng: np.random.Generator,
) -> tuple[FiringState, SpikeTrain]:
    """Simulate L spike steps and read the firing probabilities back out of
    the spike counts: q_i = count_i / (rho_hat * L), clipped and renormalized
    per circuit.  v is the last firing event of each circuit (sampled from q
    if a circuit stayed silent); state q is the clamped encoding."""
    index = params.index
    shape = index.shape
    s = np.asarray(s, dtype=np.float64)
    trains = np.zeros((shape.N, cfg.L), dtype=np.uint8)
    filt = discrete_kernel(cfg)
    wsym = params.w_symmetric()

    for l in range(cfg.L):
        h = filtered_history(trains, l, filt)
        u = wsym @ h + params.b
        trains[:, l] = spike_step(u, index, cfg.rho_hat, s, rng)

    counts = trains.sum(axis=1).astype(np.float64)
    q = np.empty(shape.N)
    q[index.state] = s
    q_ha = np.clip(counts[: shape.n_ha] / (cfg.rho_hat * cfg.L), 0.0, 1.0)
    from .inference import _normalize_ha

    q[index.ha] = _normalize_ha(index, q_ha)

    v = np.zeros(shape.N)
    for circuit in index.ha_circuits():
        any_fired = trains[circuit, :].any(axis=0)
        if any_fired.any():
            last = int(np.nonzero(any_fired)[0][-1])
            winner = int(np.argmax(trains[circuit, last]))
        else:
            p = q[circuit] / q[circuit].sum()
            winner = int(np.searchsorted(np.cumsum(p), rng.uniform(), side="right").clip(0, circuit.size - 1))
        v[circuit[winner]] = 1.0
    v[index.state] = (rng.uniform(size=shape.d_s) < q[index.state]).astype(np.float64)
    return FiringState(q=q, v=v), trains


def dump_raster(trains: SpikeTrain, path) -> None:
    """Write the spike raster as 'neuron_index,spike_step' text lines."""
    neuron, step = np.nonzero(trains)
    with open(path, "w") as fh:
        for n, l in zip(neuron, step):
            fh.write(f"{n},{l}\n")
