import numpy as np
import pytest

from oneshot import build_appendix_example, counterexample_rows, optimal_values, q_probe, value_iteration

from test_planner import ModularMdp


def test_toy_rewards_and_transitions():
    toy = build_appendix_example()
    assert toy.reward(2, (0, 1)) == 9.0
    assert toy.reward(1, ()) == 0.0
    for s in range(3):
        assert toy.transitions(s, (1, 2)) == [(0, 1.0)]
        assert toy.transitions(s, ()) == [(s, 1.0)]
        assert toy.transitions(s, (2,)) == [(2, 1.0)]


def test_greedy_q_is_not_monotone():
    toy = build_appendix_example(0.5)
    V2 = value_iteration(toy, "greedy", 0.5, iterations=2).values
    rep = q_probe(toy, V2, 0.5)
    assert toy.q(V2, 1, (3,)) - toy.q(V2, 1, (1, 3)) == pytest.approx(1.0, abs=1e-12)
    assert rep.max_monotonicity_violation >= 1.0 - 1e-12


def test_optimal_q_is_not_submodular():
    toy = build_appendix_example(0.5)
    V = optimal_values(toy, 0.5)
    gain_empty = toy.q(V, 1, (2,)) - toy.q(V, 1, ())
    gain_one = toy.q(V, 1, (1, 2)) - toy.q(V, 1, (1,))
    assert gain_one == pytest.approx(6.0, abs=1e-9)
    # brute-force optimal values (14, 17, 22) give 3.5 for the smaller base
    assert gain_empty == pytest.approx(3.5, abs=1e-9)
    assert q_probe(toy, V, 0.5).max_submodularity_violation >= gain_one - gain_empty - 1e-9


def test_modular_reward_has_no_violations():
    rng = np.random.default_rng(0)
    mdp = ModularMdp(rng.uniform(0, 1, (4, 5)), 3)
    rep = q_probe(mdp, np.zeros(4), 0.9)
    assert rep.max_monotonicity_violation <= 0 and rep.max_submodularity_violation <= 1e-15


def test_counterexample_rows():
    rows = counterexample_rows()
    assert len(rows) == 8
    greedy = [r for r in rows if r["value_function"] == "greedy"]
    assert all(r["passed"] for r in greedy)
    got = {r["quantity"]: r["computed"] for r in rows if r["value_function"] == "optimal"}
    assert got == {"Q({3},1)": 14.0, "Q({1,3},1)": 12.5, "Q({2},1)-Q({},1)": 3.5, "Q({1,2},1)-Q({1},1)": 6.0}
