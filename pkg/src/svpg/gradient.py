"""Differentials of the mean-field fixed point and policy-gradient assembly.

Two routes coexist on purpose: an exact dense linear solve that differentiates
through the fixed point (diagnostic oracle, cubic in the ha-block size), and
the cheap first-order local form that only reads each neuron's own circuit.
Training always uses the local form; the exact route exists to check it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .inference import FiringState
from .topology import RwtaParams


class OracleUnavailableError(RuntimeError):
    """Exact-differential system too ill-conditioned to trust."""


CONDITION_LIMIT = 1e12


@dataclass
class PolicyGradient:
    """Mask-projected gradient of the expected return w.r.t. W and b."""

    dW: np.ndarray
    db: np.ndarray

    def scaled(self, factor: float) -> "PolicyGradient":
        return PolicyGradient(dW=self.dW * factor, db=self.db * factor)


def _mixing_matrix(params: RwtaParams, q: np.ndarray) -> np.ndarray:
    """M = diag(q_ha) [ -G_ha diag(q) + D_sel ], shape (n_ha, N)."""
    index = params.index
    n_ha = index.shape.n_ha
    m = -index.g_ha() * q[None, :]
    m[np.arange(n_ha), np.arange(n_ha)] += 1.0
    return m * q[:n_ha, None]


def _fixed_point_system(params: RwtaParams, q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """System matrix A = I - M (W + W^T) D_sel^T and the mixer M."""
    n_ha = params.index.shape.n_ha
    m = _mixing_matrix(params, q)
    a = np.eye(n_ha) - (m @ params.w_symmetric())[:, :n_ha]
    return a, m


def _solve(a: np.ndarray, c: np.ndarray) -> tuple[np.ndarray, float]:
    cond = np.linalg.cond(a)
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        raise OracleUnavailableError(f"fixed-point system condition {cond:.3e} exceeds {CONDITION_LIMIT:.0e}")
    x = np.linalg.solve(a, c)
    residual = float(np.linalg.norm(a @ x - c))
    return x, residual


def exact_dq_db(params: RwtaParams, state: FiringState, j: int) -> np.ndarray:
    """d q_ha / d b_j through the converged fixed point (dense solve).

    The caller must hand in a tightly converged state; the derivative is of
    the fixed point itself, not of a single iteration.
    """
    a, m = _fixed_point_system(params, state.q)
    x, _ = _solve(a, m[:, j].copy())
    return x


def exact_dq_dw(params: RwtaParams, state: FiringState, j: int, k: int) -> np.ndarray:
    """d q_ha / d w_jk through the converged fixed point (dense solve)."""
    q = state.q
    a, m = _fixed_point_system(params, q)
    c = m[:, j] * q[k] + m[:, k] * q[j]
    x, _ = _solve(a, c)
    return x


def exact_solve_details(params: RwtaParams, state: FiringState, j: int, k: int | None = None):
    """Like the exact differentials but also reports (residual, condition);
    used by the gradcheck report."""
    q = state.q
    a, m = _fixed_point_system(params, q)
    cond = np.linalg.cond(a)
    c = m[:, j].copy() if k is None else m[:, j] * q[k] + m[:, k] * q[j]
    x, residual = _solve(a, c)
    return x, residual, cond


def approx_dlogq(params: RwtaParams, state: FiringState, i: int) -> tuple[np.ndarray, np.ndarray]:
    """First-order differentials of log q_i, treating the q on the right side
    of the inference map as constant (last-iteration semantics):

        d log q_i / d w_jk = [j==i] q_k + [k==i] q_j
                             - ([j in G(i)] + [k in G(i)]) q_j q_k
        d log q_i / d b_j  = [j==i] - [j in G(i)] q_j

    Returns dense (N, N) and (N,) arrays; only the rows/columns touching i's
    circuit are written, everything else stays zero.  The mask is not applied
    here.
    """
    index = params.index
    if i >= index.shape.n_ha:
        raise ValueError(f"log-gradients are defined for ha neurons, got {i}")
    q = state.q
    n = index.shape.N
    members = index.members(i)

    dw = np.zeros((n, n))
    dw[members, :] -= np.outer(q[members], q)
    dw[:, members] -= np.outer(q, q[members])
    dw[i, :] += q
    dw[:, i] += q

    db = np.zeros(n)
    db[members] -= q[members]
    db[i] += 1.0
    return dw, db


def step_score(index, q: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sum of the local log-gradients over the fired hidden/action neurons,
    in closed form.

    With d = v - q on the ha block and d = 0 on the clamped state block,
    the w-part collapses to outer(q, d) + outer(d, q) and the b-part to d.
    Each admissible entry therefore reads q_i (v_j - q_j) + q_j (v_i - q_i).
    """
    d = np.zeros_like(q)
    ha = index.ha
    d[ha] = v[ha] - q[ha]
    dw = np.outer(q, d) + np.outer(d, q)
    return dw, d


def assemble_policy_gradient(
    params: RwtaParams,
    trajectory,
    gamma: float,
    weights: np.ndarray | None = None,
) -> PolicyGradient:
    """Accumulate the per-step scores weighted by gamma^t r_t (REINFORCE) or
    by caller-supplied weights (e.g. advantages), then project onto the mask.
    An empty trajectory yields the zero gradient.
    """
    index = params.index
    n = index.shape.N
    dw = np.zeros((n, n))
    db = np.zeros(n)
    if weights is None:
        weights = np.array([gamma**t * tr.r for t, tr in enumerate(trajectory)])
    for w_t, tr in zip(weights, trajectory):
        if w_t == 0.0:
            continue
        dw_t, db_t = step_score(index, tr.q, tr.v)
        dw += w_t * dw_t
        db += w_t * db_t
    return PolicyGradient(dW=dw * params.mask, db=db)
