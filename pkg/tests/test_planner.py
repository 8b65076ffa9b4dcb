from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oneshot import (
    BeliefMdp,
    InvalidArgumentError,
    IterationCapError,
    SetActionMdp,
    SizeGuardError,
    UserTypeModel,
    build_appendix_example,
    build_net,
    exact_bellman,
    greedy_argmax,
    greedy_bellman,
    mixture_choice_prob,
    optimal_values,
    policy_evaluation,
    posterior,
    q_value,
    simple_greedy_bellman,
    value_iteration,
)
from oneshot.actions import ActionSpace

from conftest import random_model


class ModularMdp(SetActionMdp):
    """Reward sum of per-state item weights, deterministic moves to state 0."""

    def __init__(self, weights, k):
        self.weights = np.asarray(weights, dtype=float)
        self.state_count, self.num_items = self.weights.shape
        self.max_set_size = k

    def reward(self, s, w):
        return float(sum(self.weights[s, i] for i in w))

    def transitions(self, s, w):
        return [(0, 1.0)]


def belief_problem(seed, M=2, L=4, k=2, r=4):
    rng = np.random.default_rng(seed)
    return BeliefMdp(random_model(rng, M, L), build_net(M, r), k)


def brute_actions(n, k):
    return sorted(w for s in range(k + 1) for w in combinations(range(n), s))


def test_q_value_zero_v_is_reward():
    mdp = belief_problem(0)
    V = np.zeros(len(mdp.net))
    for s in range(len(mdp.net)):
        for w in brute_actions(4, 2):
            assert q_value(mdp, V, s, w, 0.9) == mdp.reward(s, w)
        assert q_value(mdp, V, s, (), 0.9) == 0.0


def test_belief_transitions_match_bayes_and_snap():
    mdp = belief_problem(1, M=3, L=4, k=3, r=5)
    table = mdp.tabulate()
    space = table.space
    for s, c in enumerate(mdp.net.points):
        for w in brute_actions(4, 3):
            a = space.index_of(w)
            assert table.reward_table[s, a] == pytest.approx(
                sum(mixture_choice_prob(mdp.model, c, w, i) for i in w), abs=1e-14
            )
            for j, item in enumerate(w):
                p = mixture_choice_prob(mdp.model, c, w, item)
                assert table.prob[s, a, j] == pytest.approx(p, abs=1e-14)
                assert table.next_state[s, a, j] == mdp.net.snap(posterior(mdp.model, c, w, item))


def test_toy_q_values_after_two_greedy_sweeps():
    toy = build_appendix_example(0.5)
    V2 = value_iteration(toy, "greedy", 0.5, iterations=2).values
    assert V2.tolist() == [10.5, 13.5, 17.5]
    assert q_value(toy, V2, 0, (2,), 0.5) == 11.75
    # the sweep producing V2 builds at state 2 from V1 and stops at {3}: adding 1 or 2 lowers Q
    V1 = value_iteration(toy, "greedy", 0.5, iterations=1).values
    action, value = greedy_argmax(lambda w: q_value(toy, V1, 1, w, 0.5), 3, 2)
    assert action == (2,) and value == 13.5 == V2[1]
    assert q_value(toy, V1, 1, (0, 2), 0.5) < value and q_value(toy, V1, 1, (1, 2), 0.5) < value


def test_toy_optimal_values():
    toy = build_appendix_example(0.5)
    V = optimal_values(toy, 0.5)
    assert np.allclose(V, [14.0, 17.0, 22.0], atol=1e-9)
    assert toy.q(V, 1, (3,)) == pytest.approx(14.0, abs=1e-9)
    # independent check: the optimal cycle 1 -> 3 -> 1 gives V(1) = 3 + 0.5 * V(3) and V(3) = 15 + 0.5 * V(1)
    assert toy.q(V, 1, (1, 3)) == pytest.approx(10.75 + 0.5 * (17 - 13.5), abs=1e-9)


def test_greedy_argmax_modular_and_empty():
    w = [0.3, 0.9, 0.1, 0.5]
    action, value = greedy_argmax(lambda s: sum(w[i] for i in s), 4, 2)
    assert action == (1, 3) and value == pytest.approx(1.4)
    assert greedy_argmax(lambda s: 1.0 + len(s), 4, 0) == ((), 1.0)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_operators_against_brute_force(seed):
    rng = np.random.default_rng(seed)
    M, L = int(rng.integers(1, 4)), int(rng.integers(1, 6))
    k = int(rng.integers(0, L + 1))
    mdp = BeliefMdp(random_model(rng, M, L), build_net(M, int(rng.integers(1, 5))), k)
    gamma = float(rng.uniform(0, 1))
    S = len(mdp.net)
    V = rng.uniform(0, 3, S)
    acts = brute_actions(L, k)

    def q(s, w):
        return q_value(mdp, V, s, w, gamma)

    Ve, Pe = exact_bellman(mdp, V, gamma)
    Vs, Ps = simple_greedy_bellman(mdp, V, gamma)
    Vg, Pg = greedy_bellman(mdp, V, gamma)
    space = mdp.space
    pool = set()
    for s in range(S):
        qs = [q(s, w) for w in acts]
        # same arithmetic path, so equality is exact and ties go to the smallest action
        assert Ve[s] == max(qs)
        assert space.actions[Pe[s]] == acts[qs.index(max(qs))]
        g_action, g_value = greedy_argmax(lambda w: q(s, w), L, k)
        assert space.actions[Ps[s]] == g_action
        assert Vs[s] == pytest.approx(g_value, abs=1e-12)
        pool.add(g_action)
    for s in range(S):
        assert Vg[s] == pytest.approx(max(q(s, w) for w in pool), abs=1e-12)
        assert space.actions[Pg[s]] in pool
    assert np.all(Vs <= Vg) and np.all(Vg <= Ve)


def test_single_net_point_greedy_equals_simple():
    mdp = belief_problem(3, M=1, L=5, k=3, r=6)
    V = np.array([0.7])
    assert np.array_equal(greedy_bellman(mdp, V, 0.8)[0], simple_greedy_bellman(mdp, V, 0.8)[0])


def test_modular_zero_v_greedy_is_exact():
    rng = np.random.default_rng(4)
    mdp = ModularMdp(rng.uniform(0, 1, (5, 6)), 3)
    V = np.zeros(5)
    for op in (simple_greedy_bellman, greedy_bellman):
        assert np.array_equal(op(mdp, V, 0.9)[0], exact_bellman(mdp, V, 0.9)[0])
    assert np.allclose(exact_bellman(mdp, V, 0.9)[0], np.sort(mdp.weights, axis=1)[:, -3:].sum(axis=1))


def test_zero_sweeps_and_monotone_exact_vi():
    mdp = belief_problem(5, M=3, L=5, k=2, r=5)
    sol = value_iteration(mdp, "exact", 1.0, iterations=0)
    assert np.all(sol.values == 0) and all(w == () for w in sol.actions())
    rec = value_iteration(mdp, "exact", 1.0, iterations=8, record=True)
    for a, b in zip(rec.value_history, rec.value_history[1:]):
        assert np.all(b >= a)
    assert np.array_equal(rec.value_history[-1], rec.values)


def test_value_iteration_errors():
    toy = build_appendix_example(1.0)
    with pytest.raises(IterationCapError):
        value_iteration(toy, "exact", 1.0, tol=1e-6, max_iterations=50)
    mdp = belief_problem(6)
    with pytest.raises(InvalidArgumentError):
        value_iteration(mdp, "bogus", 0.5, iterations=1)
    with pytest.raises(InvalidArgumentError):
        value_iteration(mdp, "exact", 0.5)
    with pytest.raises(InvalidArgumentError):
        value_iteration(mdp, "exact", 1.5, iterations=2)


def test_tolerance_and_policy_evaluation_agree():
    mdp = belief_problem(7, M=2, L=4, k=2, r=6)
    sol = value_iteration(mdp, "exact", 0.9, tol=1e-13)
    assert sol.deltas[-1] < 1e-13
    V = policy_evaluation(mdp, sol.policy, 0.9)
    assert np.allclose(V, sol.values, atol=1e-10)
    assert np.allclose(optimal_values(mdp, 0.9), V, atol=1e-10)


def test_guard_on_oversized_problem():
    model = UserTypeModel(np.ones((2, 30)), np.ones(2))
    with pytest.raises(SizeGuardError):
        BeliefMdp(model, build_net(2, 10), 8).tabulate()
    with pytest.raises(SizeGuardError):
        ActionSpace(40, 12)
