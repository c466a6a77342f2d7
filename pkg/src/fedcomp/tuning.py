"""Recommended hyperparameters (eta, p, s) and predicted complexity factors."""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class TuningReport:
    n: int
    d: int
    kappa: float
    c: float
    s_rec: int
    p_rec: float
    eta_rec: float
    iter_factor: float  # kappa + n/(s p^2), log(1/eps) excluded
    upcom_factor: float
    upcom_factor_slack: float  # using sd/n + 1 instead of ceil(sd/n)
    downcom_factor: float
    totalcom_factor: float


def eta_rec(n: int, s: int) -> float:
    """Largest admissible dual factor, n(s-1)/(s(n-1)) in (1/2, 1]."""
    if not 2 <= s <= n:
        raise ValueError(f"need 2 <= s <= n, got s={s}, n={n}")
    return n * (s - 1) / (s * (n - 1))


def nu_variance(n: int, s: int) -> float:
    """Aggregation variance factor nu = (n-s)/(s(n-1)) in [0, 1/2)."""
    if not 2 <= s <= n:
        raise ValueError(f"need 2 <= s <= n, got s={s}, n={n}")
    return (n - s) / (s * (n - 1))


def p_rec(n: int, s: int, kappa: float) -> float:
    """Recommended communication probability min(sqrt(n/(s*kappa)), 1)."""
    if kappa < 1:
        raise ValueError(f"need kappa >= 1, got {kappa}")
    return min(math.sqrt(n / (s * kappa)), 1.0)


def p_opt(n: int, s: int, eta: float, rho_sharp: float) -> float:
    """Exact threshold probability min(sqrt((1-rho#)(n-1)/(eta(s-1))), 1)."""
    if not 0 <= rho_sharp < 1:
        raise ValueError(f"need 0 <= rho_sharp < 1, got {rho_sharp}")
    return min(math.sqrt((1.0 - rho_sharp) * (n - 1) / (eta * (s - 1))), 1.0)


def s_rec(n: int, d: int, c: float) -> int:
    """Sparsity minimizing predicted TotalCom: min(n, max(2, floor(n/d), floor(cn)))."""
    if n < 2 or d < 1 or not 0 <= c <= 1:
        raise ValueError(f"invalid (n, d, c) = ({n}, {d}, {c})")
    return min(n, max(2, n // d, math.floor(c * n)))


def rate_rho(gamma: float, mu: float, L: float, p: float, eta: float,
             s: int, n: int) -> float:
    """Linear rate max((1-gamma*mu)^2, (gamma*L-1)^2, 1 - p^2*eta*(s-1)/(n-1))."""
    if not 0 < gamma < 2.0 / L:
        raise ValueError(f"violated 0 < gamma < 2/L: gamma={gamma}, 2/L={2.0 / L:.6g}")
    eta_max = eta_rec(n, s)
    if not 0 < eta <= eta_max + 1e-15:
        raise ValueError(f"violated 0 < eta <= n(s-1)/(s(n-1)) = {eta_max:.6g}: eta={eta}")
    if not 0 < p <= 1:
        raise ValueError(f"violated 0 < p <= 1: p={p}")
    return max(
        (1.0 - gamma * mu) ** 2,
        (gamma * L - 1.0) ** 2,
        1.0 - p * p * eta * (s - 1) / (n - 1),
    )


def rho_sharp(gamma: float, mu: float, L: float) -> float:
    """Uncompressed GD rate max(1-gamma*mu, gamma*L-1)^2."""
    return max(1.0 - gamma * mu, gamma * L - 1.0) ** 2


def complexity_factors(n: int, d: int, s: int, p: float, kappa: float,
                       c: float) -> TuningReport:
    """Dimensionless complexity predictors, log(1/eps) factor excluded.

    iter = kappa + n/(s p^2); down = p*d*iter; up = p*ceil(sd/n)*iter;
    total = up + c*down.
    """
    if not (2 <= s <= n and 0 < p <= 1 and kappa >= 1 and 0 <= c <= 1):
        raise ValueError(f"invalid parameters (n={n}, d={d}, s={s}, p={p}, "
                         f"kappa={kappa}, c={c})")
    iter_factor = kappa + n / (s * p * p)
    down = p * d * iter_factor
    up = p * math.ceil(s * d / n) * iter_factor
    up_slack = p * (s * d / n + 1.0) * iter_factor
    return TuningReport(
        n=n, d=d, kappa=kappa, c=c,
        s_rec=s_rec(n, d, c), p_rec=p_rec(n, s, kappa), eta_rec=eta_rec(n, s),
        iter_factor=iter_factor,
        upcom_factor=up, upcom_factor_slack=up_slack,
        downcom_factor=down,
        totalcom_factor=up + c * down,
    )
