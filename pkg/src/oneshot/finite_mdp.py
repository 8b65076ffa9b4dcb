"""Small hand-specified set-action MDPs and exhaustive Q-structure probes.

The three-state example below has a reward that is linear (so monotone and
submodular) in the action, yet its Q function under value iteration is
neither monotone nor submodular.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .actions import normalize_action
from .planner import SetActionMdp, TabularMdp


class ToyMdp(SetActionMdp):
    """Deterministic three-state, three-item MDP with actions of size <= 2.

    States and items are labelled 1..3 in the public helpers and indexed
    0..2 internally.  Rewards: ``r({i, j}, s) = s (i + j)``, ``r({i}, s) = s i``,
    ``r({}, s) = 0``.  A pair moves to the one state outside it, a singleton
    ``{i}`` moves to state ``i`` and the empty action stays put.
    """

    state_count = 3
    num_items = 3
    max_set_size = 2

    def __init__(self, gamma: float = 0.5):
        self.gamma = gamma

    def reward(self, s, w):
        w = normalize_action(w, self.num_items)
        return float((s + 1) * sum(i + 1 for i in w))

    def transitions(self, s, w):
        w = normalize_action(w, self.num_items)
        if not w:
            return [(s, 1.0)]
        if len(w) == 1:
            return [(w[0], 1.0)]
        (rest,) = set(range(3)) - set(w)
        return [(rest, 1.0)]

    def q(self, V, state: int, items=()) -> float:
        """Q value with 1-based state and item labels."""
        V = np.asarray(V, dtype=np.float64)
        w = tuple(i - 1 for i in items)
        s = state - 1
        return self.reward(s, w) + self.gamma * sum(p * V[t] for t, p in self.transitions(s, w))


def build_appendix_example(gamma: float = 0.5) -> ToyMdp:
    return ToyMdp(gamma)


@dataclass
class ProbeReport:
    """Worst monotonicity and submodularity violations of a Q table.

    ``max_monotonicity_violation`` is the largest ``Q(w) - Q(w | {l})``;
    ``max_submodularity_violation`` the largest
    ``[Q(b | l) - Q(b)] - [Q(a | l) - Q(a)]`` over ``a <= b``, ``l`` not in ``b``.
    Argmax entries are ``(state, a, b, l)`` with 0-based indices.
    """

    max_monotonicity_violation: float
    monotonicity_argmax: tuple
    max_submodularity_violation: float
    submodularity_argmax: tuple
    per_state_monotonicity: np.ndarray
    per_state_submodularity: np.ndarray

    def to_dict(self) -> dict:
        return {
            "max_monotonicity_violation": self.max_monotonicity_violation,
            "monotonicity_argmax": _plain(self.monotonicity_argmax),
            "max_submodularity_violation": self.max_submodularity_violation,
            "submodularity_argmax": _plain(self.submodularity_argmax),
        }


def _plain(x):
    if isinstance(x, (tuple, list)):
        return [_plain(v) for v in x]
    return int(x) if isinstance(x, (np.integer,)) else x


def q_probe(mdp: SetActionMdp, V, gamma: float, Q: np.ndarray | None = None) -> ProbeReport:
    """Exhaustively probe ``Q_V`` for monotonicity and submodularity violations.

    Visits every state, every ``a <= b`` with ``|b| < k`` and every item ``l``
    outside ``b``.  A precomputed ``Q`` table may be passed instead of ``V``.
    """
    table: TabularMdp = mdp.tabulate()
    if Q is None:
        Q = table.q(np.asarray(V, dtype=np.float64), gamma)
    space = table.space
    tri = space.probe_triples
    if len(tri) == 0:
        zeros = np.zeros(table.state_count)
        return ProbeReport(0.0, (), 0.0, (), zeros, zeros)
    a, b, item, al, bl = tri.T
    submod = (Q[:, bl] - Q[:, b]) - (Q[:, al] - Q[:, a])  # (S, T)
    same = a == b
    mono = np.where(same[None, :], Q[:, b] - Q[:, bl], -np.inf)
    s_mono, t_mono = np.unravel_index(np.argmax(mono), mono.shape)
    s_sub, t_sub = np.unravel_index(np.argmax(submod), submod.shape)

    def where(s, t):
        return (int(s), space.actions[a[t]], space.actions[b[t]], int(item[t]))

    return ProbeReport(
        float(mono[s_mono, t_mono]),
        where(s_mono, t_mono),
        float(submod[s_sub, t_sub]),
        where(s_sub, t_sub),
        mono.max(axis=1),
        submod.max(axis=1),
    )


# (label, operator, state, action, baseline action, reference value); 1-based labels
COUNTEREXAMPLE_QUANTITIES = (
    ("Q({3},1)", "greedy", 1, (3,), None, 11.75),
    ("Q({1,3},1)", "greedy", 1, (1, 3), None, 10.75),
    ("Q({2},1)-Q({},1)", "greedy", 1, (2,), (), 3.5),
    ("Q({1,2},1)-Q({1},1)", "greedy", 1, (1, 2), (1,), 5.5),
    ("Q({3},1)", "optimal", 1, (3,), None, 14.0),
    ("Q({1,3},1)", "optimal", 1, (1, 3), None, 12.0),
    ("Q({2},1)-Q({},1)", "optimal", 1, (2,), (), 3.0),
    ("Q({1,2},1)-Q({1},1)", "optimal", 1, (1, 2), (1,), 6.0),
)


def counterexample_rows(gamma: float = 0.5, sweeps: int = 2, tol: float = 1e-9) -> list[dict]:
    """Evaluate the eight toy Q quantities against their reference values.

    ``greedy`` rows use ``Q_V`` with ``V`` the pooled-greedy iterate after
    ``sweeps`` sweeps (so the Q of the next, third, application); ``optimal``
    rows use the optimal value function.
    """
    from .planner import optimal_values, value_iteration

    mdp = build_appendix_example(gamma)
    V = {
        "greedy": value_iteration(mdp, "greedy", gamma, iterations=sweeps).values,
        "optimal": optimal_values(mdp, gamma),
    }
    rows = []
    for label, op, state, w, base, expected in COUNTEREXAMPLE_QUANTITIES:
        value = mdp.q(V[op], state, w)
        if base is not None:
            value -= mdp.q(V[op], state, base)
        rows.append(
            {
                "quantity": label,
                "value_function": op,
                "computed": float(value),
                "expected": expected,
                "passed": bool(abs(value - expected) <= tol),
            }
        )
    return rows
