"""Stochastic gradient oracles: plain minibatch (GSGO) and variance
reduced (SVRGO).

Gradient units count batch-gradient evaluations: 1 per GSGO draw, 2 per
SVRGO draw, and m*n for a full reference refresh.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .problem import PrimalDualPoint, RobustLRProblem


def gsgo_sample(
    p: RobustLRProblem, i: int, z_i: PrimalDualPoint, rng: np.random.Generator
):
    """Uniformly sampled batch gradient; unbiased for grad_full.

    Returns (gx, gy, cost) with cost = 1 gradient unit.
    """
    j = int(rng.integers(p.n))
    gx, gy = p.grad_batch(i, j, z_i)
    return gx, gy, 1


@dataclass
class SvrgState:
    """Per-node reference points, cached full gradients, and sampling law."""

    z_tilde: list  # per node, PrimalDualPoint
    g_tilde: list  # per node, (gx, gy) = grad_full at z_tilde
    P: np.ndarray  # (m, n) sampling probabilities, rows sum to 1
    p: float  # Bernoulli refresh probability

    def __post_init__(self):
        if not 0.0 < self.p <= 1.0:
            raise ValueError(f"refresh probability p = {self.p} outside (0, 1]")
        P = np.asarray(self.P, dtype=float)
        if np.any(P <= 0.0):
            raise ValueError("all sampling probabilities must be positive")
        if np.max(np.abs(P.sum(axis=1) - 1.0)) > 1e-12:
            raise ValueError("each node's sampling law must sum to 1")
        self.P = P

    @property
    def p_min(self) -> float:
        return float(np.min(self.P))

    @classmethod
    def initialize(
        cls,
        prob: RobustLRProblem,
        z0: list,
        p: float,
        P: np.ndarray | None = None,
    ) -> "SvrgState":
        """Reference at z0 with fresh full gradients; uniform law by default."""
        if P is None:
            P = np.full((prob.m, prob.n), 1.0 / prob.n)
        g_tilde = [prob.grad_full(i, z0[i]) for i in range(prob.m)]
        return cls(z_tilde=list(z0), g_tilde=g_tilde, P=P, p=p)


def svrgo_sample(
    p: RobustLRProblem,
    i: int,
    z_i: PrimalDualPoint,
    st: SvrgState,
    rng: np.random.Generator,
):
    """Control-variate gradient anchored at the node's reference point.

    Returns (gx, gy, cost) with cost = 2 gradient units (fresh batch
    gradient plus the same batch at the reference).
    """
    l = int(rng.choice(p.n, p=st.P[i]))
    w = 1.0 / (p.n * st.P[i, l])
    gx_new, gy_new = p.grad_batch(i, l, z_i)
    gx_ref, gy_ref = p.grad_batch(i, l, st.z_tilde[i])
    tx, ty = st.g_tilde[i]
    gx = w * (gx_new - gx_ref) + tx
    gy = w * (gy_new - gy_ref) + ty
    return gx, gy, 2


def svrgo_update_reference(
    st: SvrgState,
    prob: RobustLRProblem,
    z_t: list,
    rng: np.random.Generator,
):
    """Shared Bernoulli(p) refresh of every node's reference point.

    Returns (state, cost): cost is m*n gradient units when the refresh
    fires, else 0.  The same coin is used for all nodes so references stay
    synchronized.
    """
    omega = rng.random() < st.p
    if not omega:
        return st, 0
    z_new = list(z_t)
    g_new = [prob.grad_full(i, z_new[i]) for i in range(prob.m)]
    return SvrgState(z_tilde=z_new, g_tilde=g_new, P=st.P, p=st.p), prob.m * prob.n
