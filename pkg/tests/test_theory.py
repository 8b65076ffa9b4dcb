from fractions import Fraction
from itertools import combinations
from math import e, inf

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oneshot import UserTypeModel, assumption_b
from oneshot.theory import (
    beta,
    check_nemhauser,
    check_reward_structure,
    check_theorem1,
    check_theorem2,
    classical_beta,
    conforming_model,
    coverage_function,
    heuristic_lambda,
    lambda_bound,
    mixture_posterior_residual,
    omega,
    rho,
    set_function_slacks,
    theta_bar,
)

from conftest import random_model


def test_beta_values():
    assert beta(1) == 1.0
    assert beta(3) == pytest.approx(float(Fraction(65, 81)), abs=1e-15)
    assert abs(beta(1000) - (1 - 1 / e)) < 1e-3
    assert all(beta(k) >= 1 - 1 / e for k in range(1, 200))
    assert classical_beta(3) == pytest.approx(1 - (2 / 3) ** 3)
    assert beta(5, conservative=True) == 1 - 1 / e


def test_heuristic_lambda_example():
    lam = heuristic_lambda(2.0, 0.75)
    assert lam == pytest.approx(0.3, abs=1e-15)
    assert beta(1, conservative=True) * (1 - lam) == pytest.approx(0.44, abs=5e-3)
    assert beta(1, conservative=True) * 0.75 == pytest.approx(0.47, abs=5e-3)


def identical_items(mu, p, n, M=1):
    return UserTypeModel(np.full((M, n), mu), np.full(M, p))


def test_rho_and_theta_closed_forms():
    mu, p, k = 0.4, 1.5, 2
    m = identical_items(mu, p, 5)
    B = assumption_b(m, k)
    assert rho(m, [1.0], k) == pytest.approx(k * mu / (k * mu + p), abs=1e-15)
    want = mu / ((k + 1) * mu + p) * (k * mu / (k * mu + p)) * 0.7 / (B - 0.7)
    assert theta_bar(m, [1.0], 0.7, B, k) == pytest.approx(want, abs=1e-15)
    assert theta_bar(m, [1.0], 0.0, B, k) == 0.0


def brute_theta_bar(m, c, gamma, B, k):
    best = 0.0
    for w in combinations(range(m.num_items), k):
        for extra in set(range(m.num_items)) - set(w):
            w2 = tuple(sorted(w + (extra,)))
            val = sum(c[t] * m.choice_prob(t, w2, extra) * m.continuation_prob(t, w) for t in range(m.num_types))
            best = max(best, val)
    return best * gamma / (B - gamma)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_rho_theta_against_enumeration(seed):
    rng = np.random.default_rng(seed)
    M, L = int(rng.integers(1, 4)), int(rng.integers(2, 7))
    k = int(rng.integers(1, L))
    m = conforming_model(rng, M, L, k)
    c = rng.dirichlet(np.ones(M))
    B = assumption_b(m, k)
    r = max(sum(c[t] * m.continuation_prob(t, w) for t in range(M)) for w in combinations(range(L), k))
    assert rho(m, c, k) == pytest.approx(r, abs=1e-14)
    assert rho(m, c, k) <= 1 / B + 1e-15
    assert theta_bar(m, c, 0.8, B, k) == pytest.approx(brute_theta_bar(m, c, 0.8, B, k), abs=1e-14)
    # vertex belief gives that type's best continuation
    assert rho(m, np.eye(M)[0], k) == pytest.approx(m.max_continuation(k)[0], abs=1e-15)
    g1, g2 = theta_bar(m, c, 0.3, B, k), theta_bar(m, c, 0.6, B, k)
    assert g1 <= g2


def test_omega_and_lambda():
    assert omega(1, 0.4, 0.05, 3, 0.9, 0.7) == pytest.approx(2 * 0.05)
    assert omega(3, 0.4, 0.05, 3, 0.9, 0.7) == pytest.approx(0.1 * (1 + 0.252 + 0.252**2))
    assert lambda_bound(0.0, 0.1, 3) == inf
    assert lambda_bound(0.5, 0.1, 3) == pytest.approx(0.4)


def test_theorem1_conforming_instances():
    for seed in range(8):
        rng = np.random.default_rng(seed)
        m = conforming_model(rng, 2, 5, 3)
        rep = check_theorem1(m, 3, 0.9, 4, 4)
        assert rep.hypothesis_met and rep.upper_ok and rep.lower_ok("limit") and rep.passed
        assert set(rep.lower) == {"limit", "k_dependent"}


def test_theorem1_one_sweep_and_gating():
    m = random_model(np.random.default_rng(0), 2, 5, low_term=0.05)
    m = UserTypeModel(m.scores, np.full(2, 0.1))  # B well below 2
    rep = check_theorem1(m, 2, 0.5, 1, 3)
    assert not rep.hypothesis_met
    assert rep.upper_ok and rep.passed
    assert rep.to_dict()["hypothesis_met"] is False


def test_theorem2_trivial_cases():
    m1 = conforming_model(np.random.default_rng(1), 1, 4, 2)
    assert np.all(check_theorem2(m1, 2, 0.9, 3, 2, 8).gap == 0)
    m3 = conforming_model(np.random.default_rng(2), 3, 4, 2)
    assert np.all(check_theorem2(m3, 2, 0.0, 3, 2, 8).gap == 0)


def test_theorem2_gap_shrinks_and_stays_bounded():
    for seed in range(4):
        m = conforming_model(np.random.default_rng(seed), 2, 5, 2)
        coarse = check_theorem2(m, 2, 0.9, 4, 10, 80)
        fine = check_theorem2(m, 2, 0.9, 4, 40, 80)
        assert coarse.within_bound and fine.within_bound
        assert np.abs(fine.gap).max() < np.abs(coarse.gap).max()


@pytest.mark.xfail(strict=True, reason="measured gap shrinks by 1.9-3.5x, not 4x, from r=10 to r=40")
def test_theorem2_gap_shrinks_linearly():
    ratios = []
    for seed in range(6):
        m = conforming_model(np.random.default_rng(seed), 2, 5, 2)
        g10 = np.abs(check_theorem2(m, 2, 0.9, 4, 10, 80, "exact").gap).max()
        g40 = np.abs(check_theorem2(m, 2, 0.9, 4, 40, 80, "exact").gap).max()
        ratios.append(g10 / g40)
    assert min(ratios) >= 4


def test_nemhauser_modular_is_exact():
    w = np.random.default_rng(0).uniform(0, 1, 8)
    rep = check_nemhauser(lambda s: float(w[list(s)].sum()), 8, 3)
    assert rep.greedy_value == pytest.approx(rep.optimum)
    assert rep.theta <= 1e-12 and rep.epsilon == 0.0


def test_nemhauser_coverage():
    for seed in range(20):
        f = coverage_function(np.random.default_rng(seed), 10)
        rep = check_nemhauser(f, 10, 3, theta=0.0, epsilon=0.0)
        assert rep.greedy_value >= (1 - (2 / 3) ** 3) * rep.optimum - 1e-12
        assert rep.holds("classical")


def test_nemhauser_with_injected_slack():
    rng = np.random.default_rng(3)
    base = coverage_function(rng, 8)
    noise = {}

    def f(s):
        if not s:
            return 0.0
        if s not in noise:
            noise[s] = float(rng.uniform(0, 0.3))
        return base(s) + noise[s]

    theta, eps = set_function_slacks(f, 8, 5)
    assert theta > 0
    rep = check_nemhauser(f, 8, 3)
    assert rep.theta == theta and rep.epsilon == eps
    assert rep.holds("classical")


def test_reward_structure_and_mixture_identity():
    for seed in range(10):
        rng = np.random.default_rng(seed)
        m = random_model(rng, 3, 5)
        mono, sub = check_reward_structure(m, 3)
        assert mono <= 1e-12 and sub <= 1e-12
        c = rng.dirichlet(np.ones(3))
        assert mixture_posterior_residual(m, c, (0, 2, 4)) <= 1e-12


def test_conforming_model_has_b_at_least_two():
    for seed in range(20):
        rng = np.random.default_rng(seed)
        k = int(rng.integers(1, 4))
        assert assumption_b(conforming_model(rng, 3, 6, k), k) >= 2
