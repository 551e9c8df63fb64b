"""Unbiased quantization and the difference-compression exchange.

Nodes never transmit raw vectors.  Each node keeps a reference H of what it
last "promised" to its neighbors, quantizes only the deviation nu - H, and
everyone advances matching references with a small mixing factor alpha.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .topology import DecGraph, mix


class InfeasibleParameterError(ValueError):
    """A derived algorithm parameter left its admissible window."""


@dataclass(frozen=True)
class Compressor:
    """Either the b-bit infinity-norm quantizer or the identity map.

    delta is the variance factor E||Q(x)-x||^2 <= delta ||x||^2 used by all
    step-size formulas; identity forces delta = 0.
    """

    kind: str  # "identity" or "quantize_inf"
    bits: int = 0
    delta: float = 0.0

    def __post_init__(self):
        if self.kind == "identity":
            if self.delta != 0.0:
                raise ValueError("identity compressor must have delta = 0")
        elif self.kind == "quantize_inf":
            if self.bits < 1:
                raise ValueError(f"need bits >= 1, got {self.bits}")
            if not 0.0 < self.delta <= 1.0:
                raise InfeasibleParameterError(
                    f"quantizer variance factor delta = {self.delta:.4g} "
                    "outside (0, 1]"
                )
        else:
            raise ValueError(f"unknown compressor kind {self.kind!r}")

    @property
    def bits_per_coord(self) -> int:
        """Payload cost per transmitted coordinate."""
        return self.bits + 1 if self.kind == "quantize_inf" else 32

    def apply(self, x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        if self.kind == "identity":
            return np.array(x, dtype=float)
        return quantize_inf(x, self.bits, rng)


def identity_compressor() -> Compressor:
    return Compressor(kind="identity")


def quantize_inf(x: np.ndarray, b: int, rng: np.random.Generator) -> np.ndarray:
    """Unbiased b-bit quantizer with infinity-norm scaling.

    Q(x) = (||x||_inf 2^{1-b} sign(x)) * floor(2^{b-1}|x| / ||x||_inf + u)
    with u drawn i.i.d. uniform per coordinate.  Q(0) = 0.
    """
    x = np.asarray(x, dtype=float)
    scale = np.max(np.abs(x))
    if scale == 0.0:
        return np.zeros_like(x)
    levels = 2.0 ** (b - 1)
    u = rng.random(x.shape)
    q = np.floor(levels * np.abs(x) / scale + u)
    return (scale / levels) * np.sign(x) * q


def estimate_delta(
    c: Compressor, d: int, trials: int, rng: np.random.Generator
) -> float:
    """Empirical upper estimate of the variance factor delta.

    Samples both isotropic Gaussian directions and spiky vectors (one
    dominant coordinate plus a half-level tail, which sit near the
    quantizer's worst case) on the unit sphere; returns the largest
    Monte-Carlo mean of ||Q(x)-x||^2 observed.
    """
    if trials < 1000:
        raise ValueError(f"need trials >= 1000, got {trials}")
    if c.kind == "identity":
        return 0.0
    probes = []
    for _ in range(20):
        v = rng.standard_normal(d)
        probes.append(v / np.linalg.norm(v))
    # spiky probes: dominant coordinate with tails at half a quantization
    # level, where the rounding variance per coordinate is maximal
    half_level = 2.0 ** (-c.bits)
    for frac in (0.25, 0.5, 1.0):
        v = np.full(d, half_level * frac)
        v[0] = 1.0
        probes.append(v / np.linalg.norm(v))
    per_trial = max(trials // len(probes), 1000)
    worst = 0.0
    for v in probes:
        err = 0.0
        for _ in range(per_trial):
            q = c.apply(v, rng)
            err += float(np.sum((q - v) ** 2))
        worst = max(worst, err / per_trial)
    return worst


@dataclass
class CommState:
    """Per-node reference vectors H and their mixed counterparts Hw.

    The invariant Hw = W H holds whenever the state was initialized
    consistently; comm_step preserves it.
    """

    H: np.ndarray
    Hw: np.ndarray

    @classmethod
    def from_reference(cls, g: DecGraph, H: np.ndarray) -> "CommState":
        H = np.array(H, dtype=float)
        return cls(H=H, Hw=mix(g, H))


def comm_step(
    nu: np.ndarray,
    st: CommState,
    alpha: float,
    g: DecGraph,
    c: Compressor,
    rng: np.random.Generator,
):
    """One compressed gossip exchange.

    Returns (nu_hat, nu_hat_w, new CommState); counts as one communication
    round (the only transmitted payload is the stacked Q).
    """
    if not 0.0 < alpha < 1.0 / (1.0 + c.delta):
        raise InfeasibleParameterError(
            f"alpha = {alpha:.4g} outside (0, 1/(1+delta)) with delta = {c.delta:.4g}"
        )
    nu = np.asarray(nu, dtype=float)
    Q = np.empty_like(nu)
    for i in range(g.m):
        Q[i] = c.apply(nu[i] - st.H[i], rng)
    nu_hat = st.H + Q
    nu_hat_w = st.Hw + mix(g, Q)
    new_st = CommState(
        H=(1.0 - alpha) * st.H + alpha * nu_hat,
        Hw=(1.0 - alpha) * st.Hw + alpha * nu_hat_w,
    )
    return nu_hat, nu_hat_w, new_st
