"""Robust logistic regression as a strongly-convex-strongly-concave saddle
problem.

Each node i holds n batches; batch (i, j) contributes

    f_ij(x, y) = (n/N) sum_l log(1 + exp(-b_l x^T (a_l + y)))
                 + (lambda/2m) ||x||^2 - (beta/2m) ||y||^2

with x constrained to the R_x ball and the perturbation y to the R_y ball.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .data import Dataset, Partition


@dataclass(frozen=True)
class SaddleConstants:
    """Smoothness / strong-convexity moduli of the local losses."""

    mu_x: float
    mu_y: float
    L_xx: float
    L_yy: float
    L_xy: float
    L_yx: float
    L: float = field(init=False)
    mu: float = field(init=False)
    kappa_f: float = field(init=False)

    def __post_init__(self):
        vals = (self.mu_x, self.mu_y, self.L_xx, self.L_yy, self.L_xy, self.L_yx)
        if any(v <= 0 for v in vals):
            raise ValueError(f"all constants must be positive, got {vals}")
        L = max(self.L_xx, self.L_yy, self.L_xy, self.L_yx)
        mu = min(self.mu_x, self.mu_y)
        object.__setattr__(self, "L", L)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "kappa_f", L / mu)
        if self.kappa_f < 1.0:
            raise ValueError("kappa_f < 1: moduli exceed smoothness constants")


@dataclass(frozen=True)
class PrimalDualPoint:
    x: np.ndarray
    y: np.ndarray


class RobustLRProblem:
    """Per-node, per-batch losses with gradients, ball projections, and
    worst-case smoothness constants."""

    def __init__(
        self,
        ds: Dataset,
        part: Partition,
        lam: float,
        beta: float,
        R_x: float,
        R_y: float,
        constants: SaddleConstants | None = None,
    ):
        if lam <= 0 or beta <= 0:
            raise ValueError("lambda and beta must be positive")
        if R_x <= 0 or R_y <= 0:
            raise ValueError("ball radii must be positive")
        self.N = ds.N
        self.d = ds.d
        self.m = part.m
        self.n = part.n
        self.lam = lam
        self.beta = beta
        self.R_x = R_x
        self.R_y = R_y
        covered = np.concatenate(
            [part.batch(i, j) for i in range(part.m) for j in range(part.n)]
        )
        if len(covered) != self.N or len(np.unique(covered)) != self.N:
            raise ValueError("partition is not a disjoint cover of the dataset")
        dense = ds.dense()
        # batches[i][j] = (A, b) with A rows a_l, labels b_l
        self.batches = [
            [
                (dense[part.batch(i, j)], ds.labels[part.batch(i, j)])
                for j in range(part.n)
            ]
            for i in range(part.m)
        ]
        for i in range(part.m):
            for j in range(part.n):
                if self.batches[i][j][0].shape[0] == 0:
                    raise ValueError(f"batch ({i}, {j}) is empty")
        self.constants = (
            constants if constants is not None else self.lipschitz_constants()
        )

    def loss_batch(self, i: int, j: int, z: PrimalDualPoint) -> float:
        A, b = self.batches[i][j]
        t = b * ((A + z.y) @ z.x)
        # log(1 + exp(-t)) computed stably for large |t|
        logistic = np.logaddexp(0.0, -t)
        return float(
            (self.n / self.N) * np.sum(logistic)
            + (self.lam / (2 * self.m)) * np.dot(z.x, z.x)
            - (self.beta / (2 * self.m)) * np.dot(z.y, z.y)
        )

    def grad_batch(self, i: int, j: int, z: PrimalDualPoint):
        A, b = self.batches[i][j]
        t = b * ((A + z.y) @ z.x)
        sig = expit(-t)  # 1 / (1 + exp(t))
        coeff = -b * sig  # one scalar per sample
        gx = (self.n / self.N) * ((A + z.y).T @ coeff) + (self.lam / self.m) * z.x
        gy = (self.n / self.N) * np.sum(coeff) * z.x - (self.beta / self.m) * z.y
        return gx, gy

    def grad_full(self, i: int, z: PrimalDualPoint):
        """Average of batch gradients; costs n gradient units."""
        gx = np.zeros(self.d)
        gy = np.zeros(self.d)
        for j in range(self.n):
            bx, by = self.grad_batch(i, j, z)
            gx += bx
            gy += by
        return gx / self.n, gy / self.n

    def prox_primal(self, x: np.ndarray, s: float) -> np.ndarray:
        return _project_ball(x, self.R_x)

    def prox_dual(self, y: np.ndarray, s: float) -> np.ndarray:
        return _project_ball(y, self.R_y)

    def lipschitz_constants(self) -> SaddleConstants:
        """Worst-case per-batch smoothness bounds over the constraint balls."""
        L_xx = L_yy = L_xy = 0.0
        for i in range(self.m):
            for j in range(self.n):
                A, _ = self.batches[i][j]
                N_ij = A.shape[0]
                sq = float(np.sum(A**2))
                norms = float(np.sum(np.linalg.norm(A, axis=1)))
                c = self.n / self.N
                L_xx = max(
                    L_xx,
                    0.5 * c * sq + 0.5 * c * N_ij * self.R_y**2 + self.lam / self.m,
                )
                L_yy = max(L_yy, 0.25 * c * N_ij * self.R_x**2 + self.beta / self.m)
                L_xy = max(
                    L_xy,
                    c
                    * (
                        (1.0 + self.R_x * self.R_y / 4.0) * N_ij
                        + (self.R_x / 4.0) * norms
                    ),
                )
        return SaddleConstants(
            mu_x=self.lam,
            mu_y=self.beta,
            L_xx=L_xx,
            L_yy=L_yy,
            L_xy=L_xy,
            L_yx=L_xy,
        )

    def saddle_residual(self, z: PrimalDualPoint, s: float) -> float:
        """Squared fixed-point residual of the prox-gradient optimality map."""
        if s <= 0:
            raise ValueError("step size must be positive")
        gx = np.zeros(self.d)
        gy = np.zeros(self.d)
        for i in range(self.m):
            fx, fy = self.grad_full(i, z)
            gx += fx
            gy += fy
        rx = z.x - self.prox_primal(z.x - (s / self.m) * gx, s)
        ry = z.y - self.prox_dual(z.y + (s / self.m) * gy, s)
        return float(np.dot(rx, rx) + np.dot(ry, ry))


def _project_ball(v: np.ndarray, R: float) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    norm = np.linalg.norm(v)
    if norm <= R:
        return v.copy()
    return v * (R / norm)
