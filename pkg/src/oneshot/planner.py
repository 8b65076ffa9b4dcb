"""Bellman operators and value iteration over set-valued actions.

Three operators are provided, all evaluated on the same tabulated Q function:

* ``exact``: maximise Q over every action of size ``<= k``.
* ``simple_greedy``: per state, build an action greedily item by item.
* ``greedy``: build one greedy action per state, pool them into a set G, and
  let every state take the best action in G.

Every argmax breaks ties toward the lowest item index or the
lexicographically smallest action.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np

from .actions import ActionSpace, normalize_action
from .belief import BeliefNet
from .errors import InvalidArgumentError, IterationCapError, SizeGuardError
from .model import UserTypeModel

OPERATORS = ("exact", "greedy", "simple_greedy")
# state_count * |actions| * k entries allowed in a tabulated problem
MAX_TABLE_ENTRIES = 60_000_000


class SetActionMdp(ABC):
    """Finite-state problem whose actions are item sets of size ``<= max_set_size``.

    Transition masses may sum to less than one; the deficit is the probability
    of ending in an absorbing zero-value state.
    """

    state_count: int
    num_items: int
    max_set_size: int

    @abstractmethod
    def reward(self, s: int, w: tuple) -> float:
        """Expected immediate reward of showing ``w`` in state ``s``."""

    @abstractmethod
    def transitions(self, s: int, w: tuple) -> list[tuple[int, float]]:
        """``(next_state, probability)`` pairs for showing ``w`` in state ``s``."""

    def tabulate(self, max_entries: int = MAX_TABLE_ENTRIES) -> "TabularMdp":
        """Evaluate rewards and transitions for every state and action."""
        space = ActionSpace(self.num_items, self.max_set_size)
        branches = {}
        width = 1
        for s in range(self.state_count):
            for a, w in enumerate(space.actions):
                out = self.transitions(s, w)
                branches[s, a] = out
                width = max(width, len(out))
        _guard(self.state_count, len(space), width, max_entries)
        S, A = self.state_count, len(space)
        reward = np.zeros((S, A))
        nxt = np.zeros((S, A, width), dtype=np.int64)
        prob = np.zeros((S, A, width))
        for (s, a), out in branches.items():
            reward[s, a] = self.reward(s, space.actions[a])
            for j, (t, p) in enumerate(out):
                nxt[s, a, j] = t
                prob[s, a, j] = p
        return TabularMdp(space, reward, nxt, prob)


def _guard(states, actions, width, max_entries):
    n = states * actions * max(width, 1)
    if n > max_entries:
        raise SizeGuardError(
            f"tabulating {states} states x {actions} actions x {width} branches "
            f"= {n} entries exceeds cap {max_entries}"
        )


@dataclass(eq=False)
class TabularMdp(SetActionMdp):
    """A :class:`SetActionMdp` held as dense arrays.

    Attributes
    ----------
    space : ActionSpace
    reward : ndarray, shape (S, A)
    next_state : ndarray of int, shape (S, A, J)
    prob : ndarray, shape (S, A, J)
        Branch probabilities; padding branches have probability 0.
    """

    space: ActionSpace
    reward_table: np.ndarray
    next_state: np.ndarray
    prob: np.ndarray
    state_count: int = field(init=False)
    num_items: int = field(init=False)
    max_set_size: int = field(init=False)

    def __post_init__(self):
        S, A = self.reward_table.shape
        if A != len(self.space) or self.next_state.shape[:2] != (S, A) or self.prob.shape != self.next_state.shape:
            raise InvalidArgumentError("inconsistent table shapes")
        if np.any(self.prob < 0) or np.any(self.prob.sum(axis=2) > 1 + 1e-12):
            raise InvalidArgumentError("transition masses must be non-negative and sum to <= 1")
        if np.any((self.next_state < 0) | (self.next_state >= S)):
            raise InvalidArgumentError("transition target outside the state space")
        self.state_count = S
        self.num_items = self.space.num_items
        self.max_set_size = self.space.max_size

    def reward(self, s, w):
        return float(self.reward_table[s, self.space.index_of(w)])

    def transitions(self, s, w):
        a = self.space.index_of(w)
        return [(int(t), float(p)) for t, p in zip(self.next_state[s, a], self.prob[s, a]) if p > 0]

    def tabulate(self, max_entries=MAX_TABLE_ENTRIES):
        return self

    def q(self, V: np.ndarray, gamma: float, states=None, actions=None) -> np.ndarray:
        """Q values for index arrays ``states`` and ``actions`` (broadcast together).

        With both omitted, returns the full ``(S, A)`` table.  Every caller goes
        through this one summation order, so values agree bit for bit.
        """
        if states is None and actions is None:
            R, N, P = self.reward_table, self.next_state, self.prob
        else:
            R = self.reward_table[states, actions]
            N = self.next_state[states, actions]
            P = self.prob[states, actions]
        acc = P[..., 0] * V[N[..., 0]]
        for j in range(1, P.shape[-1]):
            acc = acc + P[..., j] * V[N[..., j]]
        return R + gamma * acc


class BeliefMdp(SetActionMdp):
    """Belief-state problem over the grid ``net`` for a choice model.

    Showing ``w`` at grid point ``c`` earns the click probability
    ``sum_{l in w} p(l | c, w)`` and moves, for each clicked item, to the grid
    point nearest the posterior.  The remaining mass ends the session.
    """

    def __init__(self, model: UserTypeModel, net: BeliefNet, k: int, max_entries: int = MAX_TABLE_ENTRIES):
        if net.num_types != model.num_types:
            raise InvalidArgumentError("net and model disagree on the number of types")
        if not 0 <= k <= model.num_items:
            raise InvalidArgumentError(f"k must lie in [0, {model.num_items}]")
        self.model = model
        self.net = net
        self.state_count = len(net)
        self.num_items = model.num_items
        self.max_set_size = k
        self.max_entries = max_entries
        self._table = None

    @property
    def space(self) -> ActionSpace:
        return self.tabulate().space

    def reward(self, s, w):
        w = normalize_action(w, self.num_items)
        c = self.net.points[s]
        return float(sum(c @ self._likelihood(w, j) for j in range(len(w))))

    def transitions(self, s, w):
        w = normalize_action(w, self.num_items)
        c = self.net.points[s]
        out = []
        for j in range(len(w)):
            lik = self._likelihood(w, j)
            p = float(c @ lik)
            if p > 0:
                out.append((self.net.snap(lik * c / p), p))
        return out

    def _likelihood(self, w, j):
        return np.array([self.model.choice_probs(m, w)[j] for m in range(self.model.num_types)])

    def tabulate(self, max_entries=None):
        if self._table is None:
            self._table, self.type_probs = self._build(max_entries or self.max_entries)
        return self._table

    def _build(self, max_entries):
        space = ActionSpace(self.num_items, self.max_set_size)
        k = space.items.shape[1]
        _guard(self.state_count, len(space), k, max_entries)
        P_type = self.model.action_choice_probs(space)  # (M, A, k)
        C = self.net.points  # (S, M)
        mix = np.einsum("sm,maj->saj", C, P_type)
        reward = mix[..., 0].copy()
        for j in range(1, k):
            reward = reward + mix[..., j]
        nxt = np.zeros(mix.shape, dtype=np.int64)
        # posteriors in chunks of states to bound memory
        chunk = max(1, 4_000_000 // max(1, len(space) * k * self.model.num_types))
        for lo in range(0, self.state_count, chunk):
            hi = min(lo + chunk, self.state_count)
            joint = C[lo:hi, None, None, :] * np.moveaxis(P_type, 0, -1)[None]  # (s, A, k, M)
            tot = mix[lo:hi, ..., None]
            post = np.divide(joint, tot, out=np.zeros_like(joint), where=tot > 0)
            snapped = self.net.snap_many(post)
            nxt[lo:hi] = np.where(mix[lo:hi] > 0, snapped, 0)
        table = TabularMdp(space, reward, nxt, mix)
        return table, P_type


def q_value(mdp: SetActionMdp, V, s: int, w, gamma: float) -> float:
    """``reward(s, w) + gamma * sum_next P(next | s, w) V(next)``."""
    V = np.asarray(V, dtype=np.float64)
    if isinstance(mdp, BeliefMdp):
        mdp = mdp.tabulate()
    if isinstance(mdp, TabularMdp):
        a = mdp.space.index_of(w)
        return float(mdp.q(V, gamma, np.array([s]), np.array([a]))[0])
    return mdp.reward(s, w) + gamma * sum(p * V[t] for t, p in mdp.transitions(s, w))


def greedy_argmax(f, num_items: int, k: int) -> tuple[tuple[int, ...], float]:
    """Greedy maximisation of a set function ``f`` over sets of size ``<= k``.

    Starting from the empty set, each of ``k`` rounds adds the item ``l``
    maximising ``f(current | {l})``.  Items already present are candidates
    too; choosing one leaves the set unchanged.  Ties go to the lowest item.

    Returns
    -------
    (action, value)
        The final sorted item tuple and its ``f`` value.
    """
    current: tuple[int, ...] = ()
    value = f(current)
    for _ in range(k):
        best, best_val = None, None
        for item in range(num_items):
            cand = tuple(sorted(set(current) | {item}))
            v = f(cand)
            if best_val is None or v > best_val:
                best, best_val = cand, v
        current, value = best, best_val
    return current, value


def _greedy_rows(mdp: TabularMdp, V, gamma):
    """Greedy build for every state at once; returns (action index, Q value) arrays."""
    S = mdp.state_count
    ext = mdp.space.extend
    rows = np.arange(S)
    cur = np.zeros(S, dtype=np.int64)
    val = mdp.q(V, gamma, rows, cur)
    for _ in range(mdp.space.max_size):
        cand = ext[cur]  # (S, L)
        vals = mdp.q(V, gamma, rows[:, None], cand)
        best = np.argmax(vals, axis=1)
        cur = cand[rows, best]
        val = vals[rows, best]
    return cur, val


def exact_bellman(mdp: SetActionMdp, V, gamma: float):
    """One exact backup; returns ``(values, policy)`` with policy as action indices."""
    table = mdp.tabulate()
    Q = table.q(np.asarray(V, dtype=np.float64), gamma)
    policy = np.argmax(Q, axis=1)
    return Q[np.arange(table.state_count), policy], policy


def simple_greedy_bellman(mdp: SetActionMdp, V, gamma: float):
    """One backup with a per-state greedy action."""
    table = mdp.tabulate()
    policy, values = _greedy_rows(table, np.asarray(V, dtype=np.float64), gamma)
    return values, policy


def greedy_bellman(mdp: SetActionMdp, V, gamma: float, return_pool: bool = False):
    """One backup of the pooled greedy operator.

    Phase 1 builds a greedy action for every state; the distinct actions form
    the pool G.  Phase 2 gives every state its best action within G.
    """
    table = mdp.tabulate()
    V = np.asarray(V, dtype=np.float64)
    phase1, _ = _greedy_rows(table, V, gamma)
    pool = np.unique(phase1)  # sorted, so argmax ties pick the lexicographically smallest
    S = table.state_count
    rows = np.arange(S)
    Q = table.q(V, gamma, rows[:, None], pool[None, :])
    best = np.argmax(Q, axis=1)
    values, policy = Q[rows, best], pool[best]
    if return_pool:
        return values, policy, pool
    return values, policy


_BACKUPS = {
    "exact": exact_bellman,
    "greedy": greedy_bellman,
    "simple_greedy": simple_greedy_bellman,
}


@dataclass
class Solution:
    """Result of value iteration.

    ``policy`` holds action indices into ``space``; ``deltas`` the sup-norm
    change of each sweep.  When recorded, ``value_history[t]`` and
    ``policy_history[t]`` are the iterate after ``t`` sweeps.
    """

    operator: str
    gamma: float
    space: ActionSpace
    values: np.ndarray
    policy: np.ndarray
    deltas: list = field(default_factory=list)
    value_history: list | None = None
    policy_history: list | None = None

    @property
    def iterations(self) -> int:
        return len(self.deltas)

    def actions(self) -> list[tuple[int, ...]]:
        return [self.space.actions[a] for a in self.policy]

    def to_dict(self) -> dict:
        return {
            "operator": self.operator,
            "gamma": self.gamma,
            "iterations": self.iterations,
            "values": self.values.tolist(),
            "policy": [list(w) for w in self.actions()],
            "deltas": list(self.deltas),
        }


def value_iteration(
    mdp: SetActionMdp,
    operator: str = "greedy",
    gamma: float = 1.0,
    iterations: int | None = None,
    tol: float | None = None,
    max_iterations: int = 10_000,
    record: bool = False,
) -> Solution:
    """Synchronous value iteration from the zero value function.

    Runs exactly ``iterations`` sweeps, or until the sup-norm change drops
    below ``tol``.  Raises :class:`IterationCapError` if ``tol`` is not met
    within ``max_iterations`` sweeps.
    """
    if operator not in _BACKUPS:
        raise InvalidArgumentError(f"unknown operator {operator!r}; choose from {OPERATORS}")
    if not 0.0 <= gamma <= 1.0:
        raise InvalidArgumentError("gamma must lie in [0, 1]")
    if (iterations is None) == (tol is None):
        raise InvalidArgumentError("give exactly one of iterations and tol")
    if iterations is not None and iterations < 0:
        raise InvalidArgumentError("iterations must be non-negative")
    backup = _BACKUPS[operator]
    table = mdp.tabulate()
    V = np.zeros(table.state_count)
    policy = np.zeros(table.state_count, dtype=np.int64)
    deltas = []
    vh = [V] if record else None
    ph = [policy] if record else None
    limit = iterations if iterations is not None else max_iterations
    for _ in range(limit):
        new_V, policy = backup(table, V, gamma)
        deltas.append(float(np.max(np.abs(new_V - V))) if len(V) else 0.0)
        V = new_V
        if record:
            vh.append(V)
            ph.append(policy)
        if tol is not None and deltas[-1] < tol:
            break
    else:
        if tol is not None and limit > 0:
            raise IterationCapError(f"{operator} value iteration did not reach tol={tol} in {limit} sweeps")
    if tol is not None and limit == 0:
        raise IterationCapError("max_iterations must be positive")
    return Solution(operator, gamma, table.space, V, policy, deltas, vh, ph)


def policy_evaluation(mdp: SetActionMdp, policy, gamma: float) -> np.ndarray:
    """Exact values of a stationary policy, solving ``(I - gamma P) V = R``."""
    table = mdp.tabulate()
    S = table.state_count
    policy = np.asarray(policy, dtype=np.int64)
    rows = np.arange(S)
    P = np.zeros((S, S))
    np.add.at(P, (rows[:, None], table.next_state[rows, policy]), table.prob[rows, policy])
    return np.linalg.solve(np.eye(S) - gamma * P, table.reward_table[rows, policy])


def optimal_values(mdp: SetActionMdp, gamma: float, tol: float = 1e-12) -> np.ndarray:
    """Optimal value function: exact VI to ``tol``, then polished by solving for its greedy policy."""
    sol = value_iteration(mdp, "exact", gamma, tol=tol)
    V = policy_evaluation(mdp, sol.policy, gamma)
    # one more improvement step must not change the policy's values
    V2, pol = exact_bellman(mdp, V, gamma)
    if not np.array_equal(pol, sol.policy):
        V = policy_evaluation(mdp, pol, gamma)
    return V
