"""LIBSVM parsing, synthetic data generation, and node/batch partitioning."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class ParseError(ValueError):
    pass


@dataclass(frozen=True)
class Dataset:
    """Binary-labeled samples with sparse features stored index/value."""

    labels: np.ndarray  # (N,), entries in {-1, +1}
    indices: list  # per sample, int array of 0-based feature indices
    values: list  # per sample, float array matching indices
    d: int

    @property
    def N(self) -> int:
        return self.labels.shape[0]

    def dense(self) -> np.ndarray:
        A = np.zeros((self.N, self.d))
        for i, (idx, val) in enumerate(zip(self.indices, self.values)):
            A[i, idx] = val
        return A


@dataclass(frozen=True)
class Partition:
    """assignment[i][j] = sample indices of batch j on node i."""

    assignment: list
    m: int
    n: int

    def batch(self, i: int, j: int) -> np.ndarray:
        return self.assignment[i][j]


def parse_libsvm(stream) -> Dataset:
    """Parse LIBSVM text: "<label> <idx>:<val> ...", indices 1-based and
    strictly increasing per line.  0/1 labels are remapped to -1/+1."""
    labels = []
    indices = []
    values = []
    d = 0
    for lineno, line in enumerate(stream, start=1):
        line = line.strip()
        if not line:
            continue
        parts = line.split()
        try:
            lab = float(parts[0])
        except ValueError:
            raise ParseError(f"line {lineno}: non-numeric label {parts[0]!r}")
        if lab in (1.0, +1.0):
            lab = 1.0
        elif lab in (-1.0, 0.0):
            lab = -1.0
        else:
            raise ParseError(f"line {lineno}: unknown label value {parts[0]!r}")
        idx = []
        val = []
        prev = 0
        for tok in parts[1:]:
            try:
                k_str, v_str = tok.split(":", 1)
                k = int(k_str)
                v = float(v_str)
            except ValueError:
                raise ParseError(f"line {lineno}: malformed feature token {tok!r}")
            if k <= prev:
                raise ParseError(
                    f"line {lineno}: feature index {k} not strictly increasing"
                )
            prev = k
            idx.append(k - 1)
            val.append(v)
        labels.append(lab)
        indices.append(np.array(idx, dtype=np.int64))
        values.append(np.array(val, dtype=float))
        if idx:
            d = max(d, idx[-1] + 1)
    return Dataset(
        labels=np.array(labels, dtype=float), indices=indices, values=values, d=d
    )


def serialize_libsvm(ds: Dataset) -> str:
    lines = []
    for lab, idx, val in zip(ds.labels, ds.indices, ds.values):
        toks = ["%+d" % int(lab)]
        toks += ["%d:%.17g" % (k + 1, v) for k, v in zip(idx, val)]
        lines.append(" ".join(toks))
    return "\n".join(lines) + "\n"


def synthesize(N: int, d: int, seed: int) -> Dataset:
    """Gaussian features, labels from a random linear separator with 10% of
    labels flipped.  Deterministic per seed."""
    if N < 1 or d < 1:
        raise ValueError("need N, d >= 1")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xDA7A]))
    A = rng.standard_normal((N, d))
    w = rng.standard_normal(d)
    labels = np.where(A @ w >= 0.0, 1.0, -1.0)
    flip = rng.random(N) < 0.1
    labels[flip] *= -1.0
    all_idx = np.arange(d, dtype=np.int64)
    return Dataset(
        labels=labels,
        indices=[all_idx] * N,
        values=[A[i] for i in range(N)],
        d=d,
    )


def partition(ds: Dataset, m: int, n: int, seed: int, mode: str = "shuffled") -> Partition:
    """Deal samples round-robin to m nodes, then round-robin to n batches
    within each node.  mode "sorted" orders by label and hands each node a
    contiguous block (heterogeneous nodes); "shuffled" permutes by seed."""
    N = ds.N
    if N < m * n:
        raise ValueError(f"need N >= m*n, got N={N}, m={m}, n={n}")
    if mode == "shuffled":
        rng = np.random.default_rng(np.random.SeedSequence([seed, 0xBA7C]))
        order = rng.permutation(N)
        per_node = [order[i::m] for i in range(m)]
    elif mode == "sorted":
        order = np.argsort(ds.labels, kind="stable")
        # contiguous label-sorted blocks, sizes differing by at most 1
        bounds = [round(i * N / m) for i in range(m + 1)]
        per_node = [order[bounds[i]:bounds[i + 1]] for i in range(m)]
    else:
        raise ValueError(f"unknown partition mode {mode!r}")
    assignment = []
    for i in range(m):
        assignment.append([np.sort(per_node[i][j::n]) for j in range(n)])
    return Partition(assignment=assignment, m=m, n=n)
