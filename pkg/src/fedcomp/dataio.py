"""LIBSVM-format parsing, client sharding, and synthetic data generation.

Samples are kept sparse (index, value) end to end; densification happens
only inside the gradient kernels in :mod:`fedcomp.problems`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class ParseError(ValueError):
    """Malformed LIBSVM input, with the offending 1-based line number."""

    def __init__(self, line_no: int, message: str):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}")


@dataclass(frozen=True)
class Sample:
    indices: tuple[int, ...]  # 1-based, strictly increasing
    values: tuple[float, ...]
    label: float  # -1.0 or +1.0


@dataclass(frozen=True)
class Dataset:
    samples: tuple[Sample, ...]
    d_raw: int  # max feature index seen

    @property
    def M(self) -> int:
        return len(self.samples)


@dataclass(frozen=True)
class ShardedDataset:
    shards: tuple[Dataset, ...]
    d: int  # shared model dimension (d_raw of the source)

    @property
    def n(self) -> int:
        return len(self.shards)

    @property
    def shard_size(self) -> int:
        return self.shards[0].M


def parse_libsvm(text: str | bytes) -> Dataset:
    """Parse LIBSVM text ``<label> <idx>:<val> ...`` into a Dataset.

    Labels are normalized to {-1, +1}: any nonpositive label maps to -1.
    Blank lines are skipped. Indices must be >= 1 and strictly increasing
    within a line.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    samples = []
    d_raw = 0
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        tokens = line.split()
        try:
            raw_label = float(tokens[0])
        except ValueError:
            raise ParseError(line_no, f"bad label token {tokens[0]!r}") from None
        label = 1.0 if raw_label > 0 else -1.0
        indices: list[int] = []
        values: list[float] = []
        prev = 0
        for tok in tokens[1:]:
            try:
                idx_str, val_str = tok.split(":", 1)
                idx = int(idx_str)
                val = float(val_str)
            except ValueError:
                raise ParseError(line_no, f"bad feature token {tok!r}") from None
            if idx < 1:
                raise ParseError(line_no, f"feature index {idx} < 1")
            if idx <= prev:
                raise ParseError(line_no, f"index {idx} not increasing after {prev}")
            prev = idx
            indices.append(idx)
            values.append(val)
        d_raw = max(d_raw, prev)
        samples.append(Sample(tuple(indices), tuple(values), label))
    return Dataset(tuple(samples), d_raw)


def load_libsvm(path: str) -> Dataset:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_libsvm(fh.read())


def to_libsvm(dataset: Dataset) -> str:
    """Serialize a Dataset back to LIBSVM text (round-trips with parse)."""
    lines = []
    for s in dataset.samples:
        feats = " ".join(f"{i}:{v:.17g}" for i, v in zip(s.indices, s.values))
        head = "+1" if s.label > 0 else "-1"
        lines.append(f"{head} {feats}" if feats else head)
    return "\n".join(lines) + "\n"


def shard(dataset: Dataset, n: int) -> ShardedDataset:
    """Split the first n*floor(M/n) samples into n contiguous equal shards.

    The remainder of M divided by n samples is discarded. All shards share
    the model dimension d_raw of the full dataset.
    """
    if n < 2:
        raise ValueError(f"need n >= 2 clients, got {n}")
    if dataset.M < n:
        raise ValueError(f"too few samples: M={dataset.M} < n={n}")
    size = dataset.M // n
    shards = tuple(
        Dataset(dataset.samples[i * size : (i + 1) * size], dataset.d_raw)
        for i in range(n)
    )
    return ShardedDataset(shards, dataset.d_raw)


def densify(dataset: Dataset, d: int) -> tuple[np.ndarray, np.ndarray]:
    """Return (A, b) with A of shape (M, d) and labels b in {-1,+1}."""
    A = np.zeros((dataset.M, d))
    b = np.empty(dataset.M)
    for m, s in enumerate(dataset.samples):
        for i, v in zip(s.indices, s.values):
            A[m, i - 1] = v
        b[m] = s.label
    return A, b


def synthetic_classification(
    d: int, M: int, seed: int, density: float = 0.1, scale: float = 1.0
) -> Dataset:
    """Generate a sparse binary-classification Dataset.

    Labels follow a planted linear separator with sign flips, so the
    resulting logistic problem is well conditioned but not separable.
    """
    rng = np.random.default_rng(seed)
    w = rng.standard_normal(d)
    samples = []
    for _ in range(M):
        nnz = max(1, rng.binomial(d, density))
        idx = np.sort(rng.choice(d, size=nnz, replace=False)) + 1
        val = rng.standard_normal(nnz) * scale
        margin = sum(v * w[i - 1] for i, v in zip(idx, val))
        label = 1.0 if margin + 0.5 * rng.standard_normal() > 0 else -1.0
        samples.append(Sample(tuple(int(i) for i in idx), tuple(val), label))
    # force the full dimension so d_raw == d
    last = samples[-1]
    if last.indices[-1] != d:
        samples[-1] = Sample(last.indices[:-1] + (d,), last.values, last.label)
    return Dataset(tuple(samples), d)
