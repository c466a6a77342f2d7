"""Binary sampling masks: template pattern, per-round permutations, coin flips.

Everything is regenerated on the fly from a shared master seed, so the
simulated clients and server agree on the mask of every round without ever
exchanging it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# independent substreams derived from the master seed
_COIN_STREAM = 0
_PERM_STREAM = 1


@dataclass(frozen=True)
class TemplatePattern:
    """Fixed d x n binary matrix with exactly s ones in every row."""

    d: int
    n: int
    s: int
    bits: np.ndarray  # (d, n) uint8, read-only

    @property
    def max_column_ones(self) -> int:
        return int(self.bits.sum(axis=0).max())


def template(d: int, n: int, s: int) -> TemplatePattern:
    """Build the template pattern for (d, n, s).

    When d*s >= n, row k (0-based) has s ones in the wraparound block of
    columns s*k, ..., s*(k+1)-1 (mod n). Otherwise column i < d*s has a
    single one at row i mod d and the remaining columns are zero.
    """
    if d < 1:
        raise ValueError(f"need d >= 1, got {d}")
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    if not 2 <= s <= n:
        raise ValueError(f"need 2 <= s <= n, got s={s}, n={n}")
    bits = np.zeros((d, n), dtype=np.uint8)
    if d * s >= n:
        for k in range(d):
            cols = (s * k + np.arange(s)) % n
            bits[k, cols] = 1
    else:
        for i in range(d * s):
            bits[i % d, i] = 1
    out = TemplatePattern(d, n, s, bits)
    bits.setflags(write=False)
    return out


class SharedRandomness:
    """Counter-based source of the round coins and column permutations.

    Both streams are pure functions of (master_seed, t), so any round is
    randomly accessible without replaying history and independently
    reproducible by every simulated party.
    """

    def __init__(self, master_seed: int, p: float):
        if not 0 < p <= 1:
            raise ValueError(f"need 0 < p <= 1, got {p}")
        self.master_seed = int(master_seed)
        self.p = float(p)

    def _rng(self, stream: int, t: int) -> np.random.Generator:
        ss = np.random.SeedSequence(self.master_seed, spawn_key=(stream, t))
        return np.random.default_rng(ss)

    def coin(self, t: int) -> bool:
        """Communication coin for round t, Prob(True) = p."""
        if self.p >= 1.0:
            return True
        return bool(self._rng(_COIN_STREAM, t).random() < self.p)

    def permutation(self, t: int, n: int) -> np.ndarray:
        """Uniform permutation of range(n) for round t."""
        return self._rng(_PERM_STREAM, t).permutation(n)


def client_column(
    pattern: TemplatePattern, rng: SharedRandomness, t: int, i: int
) -> np.ndarray:
    """Mask column of client i for round t: template column perm_t(i).

    Only defined on communication rounds; querying a round whose coin is 0
    is a contract violation.
    """
    if not 0 <= i < pattern.n:
        raise ValueError(f"client index {i} out of range [0, {pattern.n})")
    if not rng.coin(t):
        raise RuntimeError(f"round {t} has no communication (coin is 0)")
    perm = rng.permutation(t, pattern.n)
    return pattern.bits[:, perm[i]].copy()


def round_mask(
    pattern: TemplatePattern, rng: SharedRandomness, t: int
) -> np.ndarray:
    """All client columns of round t, stacked as an (n, d) matrix."""
    if not rng.coin(t):
        raise RuntimeError(f"round {t} has no communication (coin is 0)")
    perm = rng.permutation(t, pattern.n)
    return pattern.bits[:, perm].T.astype(float)


def mask_from_permutation(pattern: TemplatePattern, perm: np.ndarray) -> np.ndarray:
    """(n, d) mask matrix for an explicit column permutation (for enumeration)."""
    return pattern.bits[:, np.asarray(perm)].T.astype(float)
