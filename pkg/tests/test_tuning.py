import math

import pytest
from hypothesis import given, strategies as st

from fedcomp.tuning import (
    complexity_factors,
    eta_rec,
    nu_variance,
    p_opt,
    p_rec,
    rate_rho,
    rho_sharp,
    s_rec,
)

KAPPA = 1.0 / 0.003 + 1.0  # condition number for mu = 0.003 * L0


def test_eta_rec_values():
    assert eta_rec(6, 2) == pytest.approx(0.6)
    assert eta_rec(3000, 10) == pytest.approx(27000 / 29990)
    assert eta_rec(3000, 10) == pytest.approx(0.90030, abs=5e-6)
    assert eta_rec(5, 5) == 1.0


def test_eta_rec_range():
    for n in range(2, 40):
        for s in range(2, n + 1):
            assert 0.5 < eta_rec(n, s) <= 1.0


def test_nu_values():
    assert nu_variance(6, 2) == pytest.approx(0.4)
    assert nu_variance(7, 7) == 0.0


@given(st.integers(2, 200), st.integers(2, 200))
def test_eta_and_nu_sum_to_one(n, s):
    if s > n:
        n, s = s, n
    assert eta_rec(n, s) + nu_variance(n, s) == pytest.approx(1.0)


def test_p_rec_values():
    assert p_rec(3000, 10, KAPPA) == pytest.approx(math.sqrt(3000 / (10 * KAPPA)))
    assert p_rec(3000, 10, KAPPA) == pytest.approx(0.94727, abs=5e-5)
    assert p_rec(100, 2, 1.0) == 1.0  # capped at 1


def test_p_rec_rejects_small_kappa():
    with pytest.raises(ValueError, match="kappa"):
        p_rec(10, 2, 0.5)


def test_s_rec_values():
    assert s_rec(3000, 300, 0.0) == 10  # floor(n/d)
    assert s_rec(100, 300, 0.0) == 2  # floor(n/d) = 0, floor lifted to 2
    assert s_rec(1000, 300, 0.4) == 400  # floor(c n) dominates
    assert s_rec(50, 3, 1.0) == 50  # c = 1 forgoes compression


def test_rate_rho_quadratic_example():
    # gamma*mu = gamma*L = 1 kills the gradient terms; contraction term rules
    rho = rate_rho(1.0, 1.0, 1.0, p=0.3, eta=5 / 9, s=2, n=10)
    assert rho == pytest.approx(1.0 - 0.09 * (5 / 9) / 9)
    assert rho == pytest.approx(0.994444, abs=5e-7)


def test_rate_rho_gradient_term_dominates():
    # 1 - gamma*mu = 0.985 -> (1-gamma*mu)^2 ~ 0.9702 beats the p-term at p=1
    rho = rate_rho(0.015, 1.0, 100.0, p=1.0, eta=1.0, s=4, n=4)
    assert rho == pytest.approx(0.985**2)


def test_rate_rho_names_violated_condition():
    with pytest.raises(ValueError, match="2/L"):
        rate_rho(3.0, 1.0, 1.0, p=0.5, eta=1.0, s=2, n=2)
    with pytest.raises(ValueError, match="eta"):
        rate_rho(0.5, 1.0, 1.0, p=0.5, eta=0.99, s=2, n=3)
    with pytest.raises(ValueError, match="p"):
        rate_rho(0.5, 1.0, 1.0, p=0.0, eta=1.0, s=2, n=2)


def test_p_opt_is_exact_threshold():
    gamma, mu, L = 0.018, 1.0, 100.0
    sharp = rho_sharp(gamma, mu, L)
    for n, s in [(10, 2), (30, 7), (6, 6)]:
        eta = eta_rec(n, s)
        p_star = p_opt(n, s, eta, sharp)
        assert p_star < 1.0
        assert rate_rho(gamma, mu, L, p_star, eta, s, n) == pytest.approx(
            sharp, rel=1e-12
        )
        # below the threshold the communication term strictly dominates
        assert rate_rho(gamma, mu, L, 0.5 * p_star, eta, s, n) > sharp


def test_rho_sharp_symmetric_stepsize():
    # gamma = 2/(L+mu) balances both branches at ((kappa-1)/(kappa+1))^2
    mu, L = 1.0, 9.0
    gamma = 2.0 / (L + mu)
    assert rho_sharp(gamma, mu, L) == pytest.approx((8 / 10) ** 2)


def test_complexity_factors_fields():
    rep = complexity_factors(n=3000, d=300, s=10, p=0.5, kappa=KAPPA, c=0.0)
    assert rep.iter_factor == pytest.approx(KAPPA + 3000 / (10 * 0.25))
    assert rep.upcom_factor == pytest.approx(0.5 * 1 * rep.iter_factor)
    assert rep.downcom_factor == pytest.approx(0.5 * 300 * rep.iter_factor)
    assert rep.totalcom_factor == rep.upcom_factor  # c = 0
    assert rep.s_rec == 10
    assert rep.eta_rec == pytest.approx(eta_rec(3000, 10))
    # slack bound ceil(sd/n) <= sd/n + 1 holds
    assert rep.upcom_factor <= rep.upcom_factor_slack


def test_compression_beats_full_participation_uplink():
    # recommended (s, p) versus the s = n, p = 1/sqrt(kappa) baseline at c = 0
    n, d, kappa = 3000, 300, KAPPA
    s = s_rec(n, d, 0.0)
    rec = complexity_factors(n, d, s, p_rec(n, s, kappa), kappa, c=0.0)
    base = complexity_factors(n, d, n, 1.0 / math.sqrt(kappa), kappa, c=0.0)
    assert rec.totalcom_factor < base.totalcom_factor


def test_totalcom_combines_up_and_down():
    rep = complexity_factors(n=300, d=300, s=60, p=0.4, kappa=50.0, c=0.2)
    assert rep.totalcom_factor == pytest.approx(
        rep.upcom_factor + 0.2 * rep.downcom_factor
    )


def test_complexity_factors_rejects_bad_parameters():
    with pytest.raises(ValueError):
        complexity_factors(n=10, d=5, s=1, p=0.5, kappa=2.0, c=0.0)
    with pytest.raises(ValueError):
        complexity_factors(n=10, d=5, s=2, p=0.5, kappa=2.0, c=1.5)
