"""Reward-modulated STDP.

The learning rule is the classic four-tuple form: a presynaptic spike at step
l contributes W_pre plus a window-filtered read of the postsynaptic history,
and symmetrically for a postsynaptic spike.  Setting the tuple to
<v_i, v_j, -1/rho_hat, -1/rho_hat> turns the reward-gated time average of the
coefficient into (rho_hat times) the policy-gradient element
q_j (v_i - q_i) + q_i (v_j - q_j), which is what the equivalence tests check
by Monte Carlo.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .spikesim import SpikeTrain


@dataclass(frozen=True)
class WindowConfig:
    """Normalized plasticity time window over lags 1..horizon."""

    kind: str = "rectangle"
    width: float = 10.0
    tau_rise: float = 1.0
    tau_fall: float = 5.0
    horizon: int = 50

    def __post_init__(self):
        if self.kind not in ("rectangle", "double_exponential"):
            raise ValueError(f"unknown window kind {self.kind!r}")
        if self.kind == "rectangle" and not 0 < self.width <= self.horizon:
            raise ValueError("rectangle width must be in (0, horizon]")
        if self.kind == "double_exponential" and self.tau_rise >= self.tau_fall:
            raise ValueError("double exponential needs tau_rise < tau_fall")

    def taps(self) -> np.ndarray:
        """Discretized window, normalized to unit mass after discretization."""
        ys = np.arange(self.horizon, dtype=np.float64)
        if self.kind == "rectangle":
            raw = (ys < self.width).astype(np.float64)
        else:
            raw = np.exp(-ys / self.tau_fall) - np.exp(-ys / self.tau_rise)
        return raw / raw.sum()


@dataclass
class StdpRule:
    """Four-tuple STDP rule plus its LTP/LTD windows."""

    w_pre: float
    w_post: float
    a_plus: float
    a_minus: float
    window_plus: WindowConfig = field(default_factory=WindowConfig)
    window_minus: WindowConfig = field(default_factory=WindowConfig)


def policy_rule(v_i: float, v_j: float, rho_hat: float, window: WindowConfig | None = None) -> StdpRule:
    """The policy-gradient parameterization: <v_i, v_j, -1/rho_hat, -1/rho_hat>."""
    window = window or WindowConfig()
    return StdpRule(
        w_pre=v_i,
        w_post=v_j,
        a_plus=-1.0 / rho_hat,
        a_minus=-1.0 / rho_hat,
        window_plus=window,
        window_minus=window,
    )


def _windowed(train_row: np.ndarray, taps: np.ndarray, l: int) -> float:
    """Window-filtered spike history of one neuron entering step l."""
    depth = min(l, taps.size)
    if depth == 0:
        return 0.0
    window = train_row[l - depth : l].astype(np.float64)
    return float(window @ taps[:depth][::-1])


def stdp_coefficient(rule: StdpRule, trains: SpikeTrain, i: int, j: int, l: int) -> float:
    """Discretized STDP coefficient for synapse (i, j) at spike step l."""
    if l >= trains.shape[1]:
        raise ValueError(f"step {l} out of range for L={trains.shape[1]}")
    ltp = rule.w_pre + rule.a_plus * _windowed(trains[i], rule.window_plus.taps(), l)
    ltd = rule.w_post + rule.a_minus * _windowed(trains[j], rule.window_minus.taps(), l)
    return float(trains[j, l]) * ltp + float(trains[i, l]) * ltd


def _filtered_series(train_row: np.ndarray, taps: np.ndarray) -> np.ndarray:
    """Window-filtered history at every step l (vectorized _windowed)."""
    x = train_row.astype(np.float64)
    conv = np.convolve(x, taps)
    out = np.empty(x.size)
    out[0] = 0.0
    out[1:] = conv[: x.size - 1]
    return out


def rstdp_weight_update(
    trains: SpikeTrain,
    q: np.ndarray,
    v: np.ndarray,
    reward: float,
    rho_hat: float,
    i: int,
    j: int,
    window: WindowConfig | None = None,
) -> float:
    """Reward-gated time average of the STDP coefficient for synapse (i, j)
    over one RL step's spike train, under the policy parameterization.

    The average runs over l >= horizon so every window is fully populated; in
    expectation it equals reward * rho_hat * [q_j (v_i - q_i) + q_i (v_j - q_j)].
    """
    window = window or WindowConfig()
    taps = window.taps()
    start = window.horizon
    length = trains.shape[1]
    if length <= start:
        raise ValueError(f"need more than horizon={start} spike steps, got {length}")
    s_i = trains[i].astype(np.float64)
    s_j = trains[j].astype(np.float64)
    h_i = _filtered_series(trains[i], taps)
    h_j = _filtered_series(trains[j], taps)
    per_step = s_j * (v[i] - h_i / rho_hat) + s_i * (v[j] - h_j / rho_hat)
    return reward * float(per_step[start:].mean())


def rstdp_bias_update(
    trains: SpikeTrain,
    v: np.ndarray,
    i: int,
    rho_hat: float,
    window: WindowConfig | None = None,
) -> float:
    """Time average of the self-activation rule v_i - (1/rho_hat) * (window-
    filtered own history); expectation v_i - q_i."""
    window = window or WindowConfig()
    taps = window.taps()
    start = window.horizon
    length = trains.shape[1]
    if length <= start:
        raise ValueError(f"need more than horizon={start} spike steps, got {length}")
    h_i = _filtered_series(trains[i], taps)
    per_step = v[i] - h_i / rho_hat
    return float(per_step[start:].mean())
