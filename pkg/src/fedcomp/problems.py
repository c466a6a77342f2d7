"""Per-client differentiable objectives with smoothness/strong-convexity constants.

Two problem families: l2-regularized logistic regression over sharded data,
and synthetic quadratics with closed-form minimizers for exact tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .dataio import Dataset, ShardedDataset, densify


def sigmoid(z: np.ndarray | float) -> np.ndarray | float:
    """Branchwise stable logistic sigmoid (no overflow for |z| > 30)."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out if out.ndim else float(out)


@dataclass
class ProblemSpec:
    """Finite-sum objective f = (1/n) sum f_i with per-client oracles."""

    n: int
    d: int
    grad: Callable[[int, np.ndarray], np.ndarray]  # grad f_i at x
    value: Callable[[int, np.ndarray], float]  # f_i at x
    L: float
    mu: float
    # optional vectorized paths: gradients of all clients at per-client
    # points, and the global objective at a single point
    grad_all: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None)
    value_global: Optional[Callable[[np.ndarray], float]] = field(default=None)

    def __post_init__(self):
        if not (self.L >= self.mu >= 0):
            raise ValueError(f"need L >= mu >= 0, got L={self.L}, mu={self.mu}")

    @property
    def kappa(self) -> float:
        if self.mu <= 0:
            raise ValueError("kappa undefined for mu = 0")
        return self.L / self.mu

    def f(self, x: np.ndarray) -> float:
        if self.value_global is not None:
            return self.value_global(x)
        return sum(self.value(i, x) for i in range(self.n)) / self.n

    def grad_f(self, x: np.ndarray) -> np.ndarray:
        g = np.zeros(self.d)
        for i in range(self.n):
            g += self.grad(i, x)
        return g / self.n

    def gradients(self, X: np.ndarray) -> np.ndarray:
        """Gradients of all clients, client i evaluated at row X[i]."""
        if self.grad_all is not None:
            return self.grad_all(X)
        return np.stack([self.grad(i, X[i]) for i in range(self.n)])


@dataclass(frozen=True)
class QuadraticProblem:
    """Ground-truth companion for f_i(x) = 0.5*||x - b_i||^2."""

    b: np.ndarray  # (n, d) per-client targets
    x_star: np.ndarray
    h_star: np.ndarray  # (n, d), grad f_i(x*) = x* - b_i
    f_star: float


def quadratic_problem(b: list[np.ndarray] | np.ndarray) -> tuple[ProblemSpec, QuadraticProblem]:
    """Build f_i(x) = 0.5*||x - b_i||^2 (L = mu = 1, x* = mean of b)."""
    B = np.atleast_2d(np.asarray(b, dtype=float))
    n, d = B.shape
    if n < 2:
        raise ValueError(f"need n >= 2 clients, got {n}")
    x_star = B.mean(axis=0)
    h_star = x_star - B
    f_star = float(0.5 * np.sum((x_star - B) ** 2) / n)

    spec = ProblemSpec(
        n=n,
        d=d,
        grad=lambda i, x: x - B[i],
        value=lambda i, x: float(0.5 * np.sum((x - B[i]) ** 2)),
        L=1.0,
        mu=1.0,
        grad_all=lambda X: X - B,
    )
    return spec, QuadraticProblem(B, x_star, h_star, f_star)


def smoothness_constant(dataset: Dataset) -> float:
    """Smoothness constant of the unregularized logistic loss.

    Returns lambda_max(A^T A) / (4 M) via power iteration on A^T A
    (relative tolerance 1e-9, at most 1000 iterations).
    """
    if dataset.M < 1:
        raise ValueError("empty dataset")
    A, _ = densify(dataset, dataset.d_raw)
    if not np.any(A):
        raise ValueError("all-zero data matrix")
    rng = np.random.default_rng(0)
    v = rng.standard_normal(A.shape[1])
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(1000):
        w = A.T @ (A @ v)
        lam_new = float(np.linalg.norm(w))
        if lam_new == 0.0:
            # started in the null space; reseed
            v = rng.standard_normal(A.shape[1])
            v /= np.linalg.norm(v)
            continue
        v = w / lam_new
        if abs(lam_new - lam) <= 1e-9 * lam_new:
            lam = lam_new
            break
        lam = lam_new
    return lam / (4.0 * dataset.M)


def client_smoothness_bound(shards: ShardedDataset) -> float:
    """Uniform smoothness bound over clients: max_i of the per-shard constant.

    Every f_i must be L-smooth, so the pooled-dataset constant is not enough
    when shards are small (a single client's loss can be much rougher than
    the average loss).
    """
    return max(smoothness_constant(sh) for sh in shards.shards)


def logistic_problem(shards: ShardedDataset, mu: float) -> ProblemSpec:
    """Regularized logistic regression split across clients.

    f_i(x) = (1/M_i) sum_m log(1 + exp(-b_m a_m^T x)) + (mu/2)||x||^2
    over shard i. L = L0 + mu with L0 the max per-client smoothness
    constant, so every f_i is L-smooth.
    """
    if mu < 0:
        raise ValueError(f"need mu >= 0, got {mu}")
    n = shards.n
    d = shards.d
    if any(sh.M == 0 for sh in shards.shards):
        raise ValueError("empty shard")

    dense = [densify(sh, d) for sh in shards.shards]
    m_i = shards.shard_size
    A3 = np.stack([A for A, _ in dense])  # (n, m_i, d)
    B2 = np.stack([b for _, b in dense])  # (n, m_i)

    L0 = client_smoothness_bound(shards)

    def value(i: int, x: np.ndarray) -> float:
        margins = B2[i] * (A3[i] @ x)
        return float(np.mean(np.logaddexp(0.0, -margins)) + 0.5 * mu * np.dot(x, x))

    def grad(i: int, x: np.ndarray) -> np.ndarray:
        margins = B2[i] * (A3[i] @ x)
        coeff = -B2[i] * sigmoid(-margins) / m_i
        return A3[i].T @ coeff + mu * x

    def grad_all(X: np.ndarray) -> np.ndarray:
        margins = B2 * np.einsum("nmd,nd->nm", A3, X)
        coeff = -B2 * sigmoid(-margins) / m_i
        return np.einsum("nm,nmd->nd", coeff, A3) + mu * X

    def value_global(x: np.ndarray) -> float:
        margins = B2 * (A3 @ x)
        return float(np.mean(np.logaddexp(0.0, -margins)) + 0.5 * mu * np.dot(x, x))

    return ProblemSpec(n=n, d=d, grad=grad, value=value, L=L0 + mu, mu=mu,
                       grad_all=grad_all, value_global=value_global)
