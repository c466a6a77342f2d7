"""Convergence diagnostics: reference solutions, the Lyapunov function,
objective gaps, ergodic averages, and the communication-cost ledger.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .problems import ProblemSpec


@dataclass
class ReferenceSolution:
    x_star: np.ndarray
    h_star: np.ndarray  # (n, d), grad f_i(x*)
    f_star: float
    residual: float  # ||grad f(x*)||
    problem: ProblemSpec


def reference_solve(
    problem: ProblemSpec,
    tol: float = 1e-12,
    max_iter: int = 10**6,
    x0: Optional[np.ndarray] = None,
) -> ReferenceSolution:
    """High-precision minimizer via full-batch GD with stepsize 1/L."""
    n, d = problem.n, problem.d
    x = np.zeros(d) if x0 is None else np.asarray(x0, dtype=float).copy()
    gamma = 1.0 / problem.L
    res = np.inf
    for _ in range(max_iter):
        g = problem.gradients(np.tile(x, (n, 1))).mean(axis=0)
        res = float(np.linalg.norm(g))
        if res <= tol:
            break
        x = x - gamma * g
    else:
        raise RuntimeError(
            f"reference solve did not reach ||grad f|| <= {tol:g} in "
            f"{max_iter} iterations (final residual {res:.3e})"
        )
    h_star = problem.gradients(np.tile(x, (n, 1)))
    return ReferenceSolution(
        x_star=x,
        h_star=h_star,
        f_star=problem.f(x),
        residual=res,
        problem=problem,
    )


def lyapunov(
    state, ref: ReferenceSolution, gamma: float, p: float, eta: float,
    n: int, s: int,
) -> float:
    """Weighted squared distance of (x, h) to the optimum.

    Psi = (1/gamma) sum_i ||x_i - x*||^2
        + (gamma/(p^2 eta)) * (n-1)/(s-1) * sum_i ||h_i - h*_i||^2
    """
    x_term = np.sum((state.x - ref.x_star[None, :]) ** 2) / gamma
    h = -state.u if hasattr(state, "u") else state.h
    h_term = (
        (gamma / (p * p * eta)) * (n - 1) / (s - 1)
        * np.sum((h - ref.h_star) ** 2)
    )
    return float(x_term + h_term)


def objective_gap(x: np.ndarray, ref: ReferenceSolution) -> float:
    """f(x) - f(x*); nonnegative up to reference error."""
    return float(ref.problem.f(x) - ref.f_star)


@dataclass
class CommLedger:
    """Cumulative real-number counts per the TotalCom = UpCom + c*DownCom model."""

    c: float
    upcom: float = 0.0
    downcom: float = 0.0
    rounds: int = 0

    @property
    def totalcom(self) -> float:
        return self.upcom + self.c * self.downcom

    def charge(self, up_reals: int, down_reals: int) -> None:
        if up_reals < 0 or down_reals < 0:
            raise ValueError("communication counts must be nonnegative")
        self.upcom += up_reals
        self.downcom += down_reals
        self.rounds += 1


def ledger_charge(ledger: CommLedger, round_mask_columns: np.ndarray, d: int) -> CommLedger:
    """Charge one communication round given the (n, d) mask of that round.

    Uplink counts the worst per-client message (ones in its mask column);
    downlink is the full d-dimensional broadcast.
    """
    per_client = np.asarray(round_mask_columns).sum(axis=1)
    ledger.charge(int(per_client.max()), d)
    return ledger


@dataclass
class ErgodicState:
    """Running per-client iterate averages for the convex-mode diagnostic."""

    sums: np.ndarray  # (n, d)
    count: int = 0  # iterates accumulated, i.e. T+1

    @classmethod
    def zeros(cls, n: int, d: int) -> "ErgodicState":
        return cls(sums=np.zeros((n, d)))

    def accumulate(self, x: np.ndarray) -> None:
        self.sums += x
        self.count += 1

    def averages(self) -> np.ndarray:
        if self.count == 0:
            raise ValueError("no iterates accumulated")
        return self.sums / self.count


def ergodic_grad_metric(erg: ErgodicState, problem: ProblemSpec) -> float:
    """(1/n) sum_i ||grad f(x_tilde_i)||^2 over the ergodic client averages."""
    tilde = erg.averages()
    total = 0.0
    for i in range(problem.n):
        g = problem.gradients(np.tile(tilde[i], (problem.n, 1))).mean(axis=0)
        total += float(np.dot(g, g))
    return total / problem.n
