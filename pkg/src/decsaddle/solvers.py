"""Top-level algorithms: the restart-based stochastic-gradient method, the
variance-reduced method, and the reference-solution computation.

All parameter schedules follow the closed-form formulas in terms of the
problem constants (mu, L blocks), the compression factor delta, and the
spectrum of I - W; infeasible windows raise instead of clamping.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .compression import Compressor, InfeasibleParameterError
from .ipdhg import NodeEnsemble, StepParams, ipdhg_step
from .metrics import CostCounters, Trace, compute_anchors, distance_to_saddle, phi, phi_tilde
from .oracles import SvrgState, gsgo_sample, svrgo_sample, svrgo_update_reference
from .problem import PrimalDualPoint, RobustLRProblem, SaddleConstants
from .topology import DecGraph, SpectralInfo, mix


@dataclass(frozen=True)
class StageParams:
    """Stage-k scalars of the restart method, validated at construction."""

    k: int
    s: float
    b_x: float
    b_y: float
    gamma_x: float
    gamma_y: float
    alpha_x: float
    alpha_y: float
    M_x: float
    M_y: float
    M: float
    t: int
    rho: float
    delta: float

    def __post_init__(self):
        checks = {
            "b_x": self.b_x,
            "b_y": self.b_y,
            "M_x": self.M_x,
            "M_y": self.M_y,
            "(1-b_x)/M_x": (1.0 - self.b_x) / self.M_x,
            "(1-b_y)/M_y": (1.0 - self.b_y) / self.M_y,
        }
        for name, v in checks.items():
            if not 0.0 < v <= 1.0:
                raise InfeasibleParameterError(
                    f"stage {self.k}: {name} = {v:.6g} outside (0, 1]"
                )
        hi = 1.0 / (1.0 + self.delta)
        if not 0.0 < self.alpha_x < hi or not 0.0 < self.alpha_y < hi:
            raise InfeasibleParameterError(
                f"stage {self.k}: alpha outside (0, 1/(1+delta))"
            )
        if self.t < 1:
            raise InfeasibleParameterError(f"stage {self.k}: t = {self.t} < 1")

    def step_params(self) -> StepParams:
        return StepParams(
            s=self.s,
            gamma_x=self.gamma_x,
            gamma_y=self.gamma_y,
            alpha_x=self.alpha_x,
            alpha_y=self.alpha_y,
            delta=self.delta,
        )


def crdpsg_rho(
    consts: SaddleConstants, delta: float, spec: SpectralInfo | None
) -> float:
    """Restart rate: the guaranteed per-step progress at stage 0, halved
    geometrically across stages."""
    kf2 = consts.kappa_f**2
    kappa_g = spec.kappa_g if spec is not None else 1.0
    c = 1.0 - 1.0 / math.sqrt(2.0)
    return min(
        c / (8.0 * kf2),
        c / (16.0 * (1.0 + delta) ** 2 * kf2 * kappa_g),
        c / ((1.0 + delta) * 4.0 * kf2),
    )


def crdpsg_stage_params(
    k: int, consts: SaddleConstants, delta: float, spec: SpectralInfo | None
) -> StageParams:
    """Closed-form stage-k schedule of the restart method.

    spec = None marks the single-node degenerate case: the graph terms of
    the update vanish identically, so the gamma scale is immaterial and a
    unit eigenvalue placeholder is used.
    """
    if not 0.0 <= delta <= 1.0:
        raise InfeasibleParameterError(f"delta = {delta} outside [0, 1]")
    scale = 2.0 ** (k / 2.0)
    s0 = 1.0 / (4.0 * consts.L * consts.kappa_f)
    s = s0 / scale
    b_x = consts.mu_x * s - 4.0 * s**2 * consts.L_yx**2
    b_y = consts.mu_y * s - 4.0 * s**2 * consts.L_xy**2
    if b_x <= 0.0 or b_y <= 0.0:
        raise InfeasibleParameterError(
            f"stage {k}: b_x = {b_x:.4g}, b_y = {b_y:.4g}; the schedule "
            "degenerates when the cross-smoothness term dominates "
            "(e.g. kappa_f = 1 with L_yx = L); use kappa_f > 1 or a "
            "smaller initial step"
        )
    lam_max = spec.lambda_max if spec is not None else 1.0
    gamma_x = b_x / (2.0 * (1.0 + delta) ** 2 * lam_max)
    gamma_y = b_y / (2.0 * (1.0 + delta) ** 2 * lam_max)
    alpha_x = b_x / (1.0 + delta)
    alpha_y = b_y / (1.0 + delta)
    rd = math.sqrt(delta)
    M_x = 1.0 - rd * alpha_x / (1.0 - 0.5 * gamma_x * lam_max)
    M_y = 1.0 - rd * alpha_y / (1.0 - 0.5 * gamma_y * lam_max)
    M = min(M_x, M_y)
    rho = crdpsg_rho(consts, delta, spec)
    denom = -math.log1p(-rho / scale)
    t_real = (1.0 / denom) * max(
        math.log((3.0 * M_x + 6.0 * rd) / M),
        math.log((3.0 * M_y + 6.0 * rd) / M),
        math.log(3.0 / M),
    )
    t = max(int(math.ceil(t_real)), 1)
    return StageParams(
        k=k, s=s, b_x=b_x, b_y=b_y, gamma_x=gamma_x, gamma_y=gamma_y,
        alpha_x=alpha_x, alpha_y=alpha_y, M_x=M_x, M_y=M_y, M=M, t=t,
        rho=rho, delta=delta,
    )


def contraction_rate(params, spec: SpectralInfo, p: float | None = None) -> float:
    """Worst-case per-step decay factor of the Lyapunov diagnostic."""
    lam2 = spec.lambda_second_smallest
    terms = [
        (1.0 - params.b_x) / params.M_x,
        (1.0 - params.b_y) / params.M_y,
        1.0 - 0.5 * params.gamma_x * lam2,
        1.0 - 0.5 * params.gamma_y * lam2,
        1.0 - params.alpha_x,
        1.0 - params.alpha_y,
    ]
    if p is not None:
        terms.append(1.0 - p / 2.0)
    return max(terms)


@dataclass(frozen=True)
class SvrgParams:
    """Scalars of the variance-reduced method, validated at construction."""

    s: float
    c_tilde_x: float
    c_tilde_y: float
    b_x: float
    b_y: float
    alpha_x: float
    alpha_y: float
    gamma_x: float
    gamma_y: float
    M_x: float
    M_y: float
    p: float
    p_min: float
    delta: float

    def __post_init__(self):
        for name, v in (("b_x", self.b_x), ("b_y", self.b_y)):
            if not 0.0 < v < 1.0:
                raise InfeasibleParameterError(f"{name} = {v:.6g} outside (0, 1)")
        for name, v in (
            ("M_x", self.M_x),
            ("M_y", self.M_y),
            ("(1-b_x)/M_x", (1.0 - self.b_x) / self.M_x),
            ("(1-b_y)/M_y", (1.0 - self.b_y) / self.M_y),
        ):
            if not 0.0 < v <= 1.0:
                raise InfeasibleParameterError(f"{name} = {v:.6g} outside (0, 1]")
        hi = 1.0 / (1.0 + self.delta)
        if not 0.0 < self.alpha_x < hi or not 0.0 < self.alpha_y < hi:
            raise InfeasibleParameterError("alpha outside (0, 1/(1+delta))")
        if not 0.0 < self.p <= 1.0:
            raise InfeasibleParameterError(f"p = {self.p} outside (0, 1]")

    def step_params(self) -> StepParams:
        return StepParams(
            s=self.s,
            gamma_x=self.gamma_x,
            gamma_y=self.gamma_y,
            alpha_x=self.alpha_x,
            alpha_y=self.alpha_y,
            delta=self.delta,
        )


def cdpsvrg_params(
    consts: SaddleConstants,
    delta: float,
    spec: SpectralInfo | None,
    n: int,
    p_min: float,
    p: float,
) -> SvrgParams:
    """Closed-form parameter set of the variance-reduced method.

    spec = None marks the single-node degenerate case (see
    crdpsg_stage_params).
    """
    if not 0.0 <= delta <= 1.0:
        raise InfeasibleParameterError(f"delta = {delta} outside [0, 1]")
    if not 0.0 < p <= 1.0:
        raise InfeasibleParameterError(f"p = {p} outside (0, 1]")
    if p_min <= 0.0:
        raise InfeasibleParameterError(f"p_min = {p_min} must be positive")
    s = consts.mu * n * p_min / (24.0 * consts.L**2)
    npm = n * p_min
    c_tilde_x = 8.0 * s**2 * (consts.L_xx**2 + consts.L_yx**2) / (npm * p)
    c_tilde_y = 8.0 * s**2 * (consts.L_yy**2 + consts.L_xy**2) / (npm * p)
    b_x = s * consts.mu_x - 4.0 * s**2 * consts.L_yx**2 / npm - c_tilde_x * p
    b_y = s * consts.mu_y - 4.0 * s**2 * consts.L_xy**2 / npm - c_tilde_y * p
    lower = npm / (144.0 * consts.kappa_f**2)
    if b_x < lower - 1e-15 or b_y < lower - 1e-15:
        raise InfeasibleParameterError(
            f"b_x = {b_x:.6g} or b_y = {b_y:.6g} below the guaranteed "
            f"lower bound {lower:.6g}"
        )
    rd = math.sqrt(delta)
    lam_max = spec.lambda_max if spec is not None else 1.0
    cap = 1.0 / (4.0 * (1.0 + delta) * lam_max)
    if rd > 0.0:
        gamma_x = min(b_x / (4.0 * rd * (1.0 + delta) * lam_max), cap)
        gamma_y = min(b_y / (4.0 * rd * (1.0 + delta) * lam_max), cap)
    else:
        gamma_x = gamma_y = cap
    alpha_x = b_x / (1.0 + delta)
    alpha_y = b_y / (1.0 + delta)
    M_x = 1.0 - rd * alpha_x / (1.0 - 0.5 * gamma_x * lam_max)
    M_y = 1.0 - rd * alpha_y / (1.0 - 0.5 * gamma_y * lam_max)
    return SvrgParams(
        s=s, c_tilde_x=c_tilde_x, c_tilde_y=c_tilde_y, b_x=b_x, b_y=b_y,
        alpha_x=alpha_x, alpha_y=alpha_y, gamma_x=gamma_x, gamma_y=gamma_y,
        M_x=M_x, M_y=M_y, p=p, p_min=p_min, delta=delta,
    )


def _rng_for(seed: int, tag: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), tag]))


def run_crdpsg(
    prob: RobustLRProblem,
    g: DecGraph,
    spec: SpectralInfo | None,
    compressor: Compressor,
    K: int,
    x0: np.ndarray,
    y0: np.ndarray,
    z_star: PrimalDualPoint,
    seed: int,
    log_stride: int = 1,
    collect_phi: bool = False,
):
    """Restart-based stochastic-gradient run.

    Every stage rebuilds its schedule, zeroes the dual trackers, resets
    the compression references to the current iterates (one uncompressed
    broadcast round), and runs t_k inner steps with minibatch gradients.
    Returns (trace, final ensemble).
    """
    rng = _rng_for(seed, 0x5501)
    consts = prob.constants
    delta = compressor.delta
    x = np.tile(np.asarray(x0, dtype=float), (g.m, 1))
    y = np.tile(np.asarray(y0, dtype=float), (g.m, 1))
    trace = Trace()
    counters = CostCounters()
    payload_coords = g.m * (prob.d + prob.d)

    def oracle(i, z_i, r):
        return gsgo_sample(prob, i, z_i, r)

    ens = None
    it = 0
    for k in range(K):
        params = crdpsg_stage_params(k, consts, delta, spec)
        ens = NodeEnsemble.initialize(g, x, y)
        # restart broadcast of the fresh references, sent uncompressed
        counters.add_round(payload_coords, 32)
        anchors = (
            compute_anchors(prob, z_star, params.s) if collect_phi else None
        )
        sp = params.step_params()
        for _ in range(params.t):
            ens = ipdhg_step(ens, sp, g, oracle, prob, compressor, rng, counters)
            it += 1
            if it % log_stride == 0:
                phi_val = (
                    phi(ens, anchors, params, delta, spec) if collect_phi else None
                )
                trace.log(it, counters, distance_to_saddle(ens, z_star), phi_val)
        x, y = ens.x, ens.y
    return trace, ens


def run_cdpsvrg(
    prob: RobustLRProblem,
    g: DecGraph,
    spec: SpectralInfo | None,
    compressor: Compressor,
    T: int,
    x0: np.ndarray,
    y0: np.ndarray,
    z_star: PrimalDualPoint,
    seed: int,
    p: float | None = None,
    log_stride: int = 1,
    collect_phi: bool = False,
):
    """Variance-reduced run: one parameter set for all T iterations, with
    Bernoulli(p)-refreshed reference points.  Returns (trace, ensemble)."""
    rng = _rng_for(seed, 0x5502)
    consts = prob.constants
    if p is None:
        p = 1.0 / prob.n
    params = cdpsvrg_params(
        consts, compressor.delta, spec, prob.n, p_min=1.0 / prob.n, p=p
    )
    x = np.tile(np.asarray(x0, dtype=float), (g.m, 1))
    y = np.tile(np.asarray(y0, dtype=float), (g.m, 1))
    ens = NodeEnsemble.initialize(g, x, y)
    z0 = [PrimalDualPoint(x[i], y[i]) for i in range(g.m)]
    state = SvrgState.initialize(prob, z0, p=p)
    trace = Trace()
    counters = CostCounters()
    counters.add_grad(prob.m * prob.n)  # initial reference gradients
    anchors = compute_anchors(prob, z_star, params.s) if collect_phi else None
    sp = params.step_params()
    for t in range(1, T + 1):
        def oracle(i, z_i, r, _st=state):
            return svrgo_sample(prob, i, z_i, _st, r)

        ens = ipdhg_step(ens, sp, g, oracle, prob, compressor, rng, counters)
        z_t = [PrimalDualPoint(ens.x[i], ens.y[i]) for i in range(g.m)]
        state, cost = svrgo_update_reference(state, prob, z_t, rng)
        counters.add_grad(cost)
        if t % log_stride == 0:
            phi_val = (
                phi_tilde(ens, anchors, state, params, spec) if collect_phi else None
            )
            trace.log(t, counters, distance_to_saddle(ens, z_star), phi_val)
    return trace, ens


def compute_reference(
    prob: RobustLRProblem,
    iterations: int = 50_000,
    seed: int = 0,
    tol: float = 1e-14,
    p: float | None = None,
):
    """Single-node variance-reduced run to locate the saddle point.

    The problem must be built with m = 1 (the saddle point of the global
    objective does not depend on the partition).  Stops early once the
    prox fixed-point residual falls below tol.  Returns
    (PrimalDualPoint, residual).
    """
    if prob.m != 1:
        raise ValueError("reference computation expects an m = 1 problem")
    rng = _rng_for(seed, 0x5503)
    consts = prob.constants
    n = prob.n
    if p is None:
        p = 1.0 / n
    # step size of the variance-reduced schedule with uniform sampling
    s = consts.mu * n * (1.0 / n) / (24.0 * consts.L**2)
    x = np.zeros(prob.d)
    y = np.zeros(prob.d)
    state = SvrgState.initialize(prob, [PrimalDualPoint(x, y)], p=p)
    check_every = 500
    residual = prob.saddle_residual(PrimalDualPoint(x, y), s)
    for t in range(1, iterations + 1):
        gx, gy, _ = svrgo_sample(prob, 0, PrimalDualPoint(x, y), state, rng)
        x = prob.prox_primal(x - s * gx, s)
        y = prob.prox_dual(y + s * gy, s)
        state, _ = svrgo_update_reference(
            state, prob, [PrimalDualPoint(x, y)], rng
        )
        if t % check_every == 0:
            residual = prob.saddle_residual(PrimalDualPoint(x, y), s)
            if residual <= tol:
                break
    z = PrimalDualPoint(x, y)
    residual = prob.saddle_residual(z, s)
    if residual > 1e-7:
        warnings.warn(
            f"reference residual {residual:.3e} still above 1e-7 after "
            f"{iterations} iterations",
            stacklevel=2,
        )
    return z, residual
