"""Synchronous client-server simulation of GD, Scaffnew, and the
compressed local-training algorithm in primal (control-variate) and dual
(Algorithm-2 style) forms.

All state is float64. Aggregation sums clients in index order, so runs are
bit-for-bit reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .masks import SharedRandomness, TemplatePattern, round_mask, template
from .metrics import CommLedger
from .problems import ProblemSpec

ALGORITHMS = ("gd", "scaffnew", "compressed_scaffnew", "alg2")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    algorithm: str
    gamma: float
    p: float = 1.0
    eta: float = 1.0
    s: int = 2
    c: float = 0.0
    T: int = 1000
    master_seed: int = 0

    def validate(self, problem: ProblemSpec) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}")
        if not 0 < self.gamma < 2.0 / problem.L:
            raise ConfigError(
                f"stepsize must satisfy 0 < gamma < 2/L = {2.0 / problem.L:.6g}, "
                f"got {self.gamma:.6g}"
            )
        if not 0 < self.p <= 1:
            raise ConfigError(f"probability must satisfy 0 < p <= 1, got {self.p}")
        n = problem.n
        if self.algorithm in ("compressed_scaffnew", "alg2"):
            if not 2 <= self.s <= n:
                raise ConfigError(f"sparsity must satisfy 2 <= s <= n={n}, got {self.s}")
            eta_max = n * (self.s - 1) / (self.s * (n - 1))
            if not 0 < self.eta <= eta_max + 1e-15:
                raise ConfigError(
                    f"dual factor must satisfy 0 < eta <= n(s-1)/(s(n-1)) = "
                    f"{eta_max:.6g}, got {self.eta}"
                )
        if not 0 <= self.c <= 1:
            raise ConfigError(f"downlink weight must satisfy 0 <= c <= 1, got {self.c}")
        if self.T < 0:
            raise ConfigError(f"iteration budget must be >= 0, got {self.T}")


@dataclass
class WorldState:
    t: int
    x: np.ndarray  # (n, d) client models
    h: np.ndarray  # (n, d) control variates
    xbar_last: Optional[np.ndarray] = None  # last broadcast

    @classmethod
    def zeros(cls, n: int, d: int) -> "WorldState":
        return cls(t=0, x=np.zeros((n, d)), h=np.zeros((n, d)))

    def copy(self) -> "WorldState":
        return WorldState(
            self.t, self.x.copy(), self.h.copy(),
            None if self.xbar_last is None else self.xbar_last.copy(),
        )


@dataclass
class DualState:
    t: int
    x: np.ndarray  # (n, d)
    u: np.ndarray  # (n, d) dual variables, sum_i u_i = 0
    tau: float
    omega: float
    a: float
    xbar_last: Optional[np.ndarray] = None


def dual_constants(n: int, s: int, p: float) -> tuple[float, float]:
    """(a, omega) of the dual randomization: a = (n-1)/(p(s-1)), omega = a - 1."""
    a = (n - 1) / (p * (s - 1))
    return a, a - 1.0


def center(v: np.ndarray) -> np.ndarray:
    """v_i minus the client mean (the idempotent consensus-residual operator)."""
    return v - v.mean(axis=0, keepdims=True)


def local_step(x: np.ndarray, h: np.ndarray, grads: np.ndarray, gamma: float) -> np.ndarray:
    """xhat_i = x_i - gamma*grad f_i(x_i) + gamma*h_i (vectorized over clients)."""
    if gamma <= 0:
        raise ConfigError(f"stepsize must be positive, got {gamma}")
    return x - gamma * grads + gamma * h


def aggregate(xhat: np.ndarray, Q: np.ndarray, s: int) -> np.ndarray:
    """Server aggregate: xbar = (1/s) sum_j q_j * xhat_j, coordinatewise.

    Q has shape (n, d) with Q[i] the mask column of client i; every
    coordinate must be covered by exactly s clients.
    """
    counts = Q.sum(axis=0)
    if not np.all(counts == s):
        raise AssertionError(
            f"mask invariant violated: per-coordinate counts {counts} != s={s}"
        )
    return (Q * xhat).sum(axis=0) / s


def control_update(
    h: np.ndarray, xbar: np.ndarray, xhat: np.ndarray, Q: np.ndarray,
    p: float, eta: float, gamma: float,
) -> np.ndarray:
    """h_i += (p*eta/gamma) * q_i * (xbar - xhat_i); unmasked coords unchanged."""
    return h + (p * eta / gamma) * Q * (xbar[None, :] - xhat)


def dual_direction(xhat: np.ndarray, Q: np.ndarray, s: int, a: float) -> np.ndarray:
    """Unbiased masked estimate of center(xhat), scaled by a.

    d_{i,k} = a * (xhat_{i,k} - (1/s) sum_{j in Omega_k} xhat_{j,k}) for
    clients i covering coordinate k, else 0. Sums to zero over clients.
    """
    masked_mean = (Q * xhat).sum(axis=0) / s
    return a * Q * (xhat - masked_mean[None, :])


def step_alg1(
    state: WorldState,
    cfg: RunConfig,
    problem: ProblemSpec,
    pattern: TemplatePattern,
    rng: SharedRandomness,
    ledger: Optional[CommLedger] = None,
) -> WorldState:
    """One iteration of the compressed local-training algorithm (primal form)."""
    grads = problem.gradients(state.x)
    xhat = local_step(state.x, state.h, grads, cfg.gamma)
    if rng.coin(state.t):
        Q = round_mask(pattern, rng, state.t)
        xbar = aggregate(xhat, Q, cfg.s)
        state.h = control_update(state.h, xbar, xhat, Q, cfg.p, cfg.eta, cfg.gamma)
        state.x = np.tile(xbar, (problem.n, 1))
        state.xbar_last = xbar
        if ledger is not None:
            ledger.charge(pattern.max_column_ones, problem.d)
    else:
        state.x = xhat
    state.t += 1
    return state


def step_scaffnew(
    state: WorldState,
    cfg: RunConfig,
    problem: ProblemSpec,
    rng: SharedRandomness,
    ledger: Optional[CommLedger] = None,
) -> WorldState:
    """One iteration of Scaffnew (full-vector communication, eta = 1)."""
    grads = problem.gradients(state.x)
    xhat = local_step(state.x, state.h, grads, cfg.gamma)
    if rng.coin(state.t):
        xbar = xhat.sum(axis=0) / problem.n
        state.h = state.h + (cfg.p / cfg.gamma) * (xbar[None, :] - xhat)
        state.x = np.tile(xbar, (problem.n, 1))
        state.xbar_last = xbar
        if ledger is not None:
            ledger.charge(problem.d, problem.d)
    else:
        state.x = xhat
    state.t += 1
    return state


def step_gd(
    state: WorldState,
    cfg: RunConfig,
    problem: ProblemSpec,
    ledger: Optional[CommLedger] = None,
) -> WorldState:
    """One iteration of distributed GD (communication at every iteration)."""
    grads = problem.gradients(state.x)
    xbar = (state.x - cfg.gamma * grads).sum(axis=0) / problem.n
    state.x = np.tile(xbar, (problem.n, 1))
    state.xbar_last = xbar
    if ledger is not None:
        ledger.charge(problem.d, problem.d)
    state.t += 1
    return state


def step_alg2(
    state: DualState,
    cfg: RunConfig,
    problem: ProblemSpec,
    pattern: TemplatePattern,
    rng: SharedRandomness,
    ledger: Optional[CommLedger] = None,
) -> DualState:
    """One iteration of the dual-form algorithm.

    xhat = x - gamma*grad f(x) - gamma*u; the primal branch matches the
    primal form; u += (tau/(1+omega)) * d_t with d_t = 0 on silent rounds.
    """
    tau_max = (cfg.p / cfg.gamma) * problem.n * (cfg.s - 1) / (cfg.s * (problem.n - 1))
    if state.tau > tau_max + 1e-12 * tau_max:
        raise ConfigError(f"dual stepsize tau={state.tau:.6g} exceeds {tau_max:.6g}")
    grads = problem.gradients(state.x)
    xhat = state.x - cfg.gamma * grads - cfg.gamma * state.u
    if rng.coin(state.t):
        Q = round_mask(pattern, rng, state.t)
        xbar = aggregate(xhat, Q, cfg.s)
        d_t = dual_direction(xhat, Q, cfg.s, state.a)
        state.x = np.tile(xbar, (problem.n, 1))
        state.xbar_last = xbar
        state.u = state.u + (state.tau / (1.0 + state.omega)) * d_t
        if ledger is not None:
            ledger.charge(pattern.max_column_ones, problem.d)
    else:
        state.x = xhat
    state.t += 1
    return state


def run(
    problem: ProblemSpec,
    cfg: RunConfig,
    ledger: Optional[CommLedger] = None,
    on_step: Optional[Callable] = None,
    state: Optional[WorldState | DualState] = None,
) -> WorldState | DualState:
    """Drive cfg.T iterations of the configured algorithm from zero init.

    on_step(state, communicated) is invoked after every iteration; a truthy
    return value stops the run early.
    """
    cfg.validate(problem)
    n, d = problem.n, problem.d
    rng = SharedRandomness(cfg.master_seed, cfg.p)
    pattern = None
    if cfg.algorithm in ("compressed_scaffnew", "alg2"):
        pattern = template(d, n, cfg.s)
    if state is None:
        if cfg.algorithm == "alg2":
            a, omega = dual_constants(n, cfg.s, cfg.p)
            state = DualState(
                t=0, x=np.zeros((n, d)), u=np.zeros((n, d)),
                tau=cfg.p * cfg.eta / cfg.gamma, omega=omega, a=a,
            )
        else:
            state = WorldState.zeros(n, d)
    for _ in range(cfg.T):
        t_before = state.t
        if cfg.algorithm == "gd":
            step_gd(state, cfg, problem, ledger)
            communicated = True
        elif cfg.algorithm == "scaffnew":
            step_scaffnew(state, cfg, problem, rng, ledger)
            communicated = rng.coin(t_before)
        elif cfg.algorithm == "compressed_scaffnew":
            step_alg1(state, cfg, problem, pattern, rng, ledger)
            communicated = rng.coin(t_before)
        else:
            step_alg2(state, cfg, problem, pattern, rng, ledger)
            communicated = rng.coin(t_before)
        if on_step is not None and on_step(state, communicated):
            break
    return state
