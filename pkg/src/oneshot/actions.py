"""Enumeration and indexing of set-valued actions.

An action is a set of distinct item indices of size at most ``k``.  Actions
are stored as sorted tuples and enumerated in lexicographic tuple order, so
``np.argmax`` over an action axis returns the lexicographically smallest
maximiser.
"""

from __future__ import annotations

from functools import cached_property
from itertools import combinations
from math import comb

import numpy as np

from .errors import InvalidArgumentError, SizeGuardError

MAX_ACTIONS = 2_000_000


def count_actions(num_items: int, max_size: int) -> int:
    """Number of subsets of ``range(num_items)`` with at most ``max_size`` items."""
    return sum(comb(num_items, i) for i in range(min(max_size, num_items) + 1))


def normalize_action(items, num_items: int) -> tuple[int, ...]:
    """Return ``items`` as a sorted tuple, checking range and distinctness."""
    w = tuple(sorted(int(i) for i in items))
    if len(set(w)) != len(w):
        raise InvalidArgumentError(f"action {w} has repeated items")
    if w and (w[0] < 0 or w[-1] >= num_items):
        raise InvalidArgumentError(f"action {w} has items outside [0, {num_items})")
    return w


class ActionSpace:
    """All actions of size ``<= max_size`` over ``num_items`` items.

    Parameters
    ----------
    num_items : int
        Number of items ``|L|``.
    max_size : int
        Largest allowed action size ``k``.

    Attributes
    ----------
    actions : list of tuple
        Lexicographically sorted actions; index 0 is the empty action.
    items : ndarray, shape (A, k)
        Item indices per action, padded with -1.
    sizes : ndarray, shape (A,)
    """

    def __init__(self, num_items: int, max_size: int, max_actions: int = MAX_ACTIONS):
        if num_items < 1:
            raise InvalidArgumentError("num_items must be positive")
        if not 0 <= max_size <= num_items:
            raise InvalidArgumentError(f"max_size must lie in [0, {num_items}], got {max_size}")
        n = count_actions(num_items, max_size)
        if n > max_actions:
            raise SizeGuardError(
                f"action space C({num_items}, <={max_size}) has {n} actions, cap is {max_actions}"
            )
        self.num_items = num_items
        self.max_size = max_size
        acts = [w for size in range(max_size + 1) for w in combinations(range(num_items), size)]
        acts.sort()
        self.actions: list[tuple[int, ...]] = acts
        self.index = {w: a for a, w in enumerate(acts)}
        width = max(max_size, 1)
        self.items = np.full((len(acts), width), -1, dtype=np.int64)
        for a, w in enumerate(acts):
            self.items[a, : len(w)] = w
        self.sizes = np.array([len(w) for w in acts], dtype=np.int64)

    def __len__(self) -> int:
        return len(self.actions)

    def __repr__(self) -> str:
        return f"ActionSpace(num_items={self.num_items}, max_size={self.max_size}, size={len(self)})"

    def index_of(self, items) -> int:
        w = normalize_action(items, self.num_items)
        try:
            return self.index[w]
        except KeyError:
            raise InvalidArgumentError(f"action {w} exceeds max size {self.max_size}") from None

    def of_size(self, size: int) -> np.ndarray:
        """Indices of all actions with exactly ``size`` items."""
        return np.flatnonzero(self.sizes == size)

    @cached_property
    def extend(self) -> np.ndarray:
        """Table ``ext[a, l]`` = index of ``actions[a] | {l}``.

        Adding an item already present leaves the action unchanged.  Entries
        whose union would exceed ``max_size`` are -1.
        """
        ext = np.full((len(self), self.num_items), -1, dtype=np.int64)
        for a, w in enumerate(self.actions):
            for item in range(self.num_items):
                if item in w:
                    ext[a, item] = a
                elif len(w) < self.max_size:
                    ext[a, item] = self.index[tuple(sorted(w + (item,)))]
        return ext

    @cached_property
    def probe_triples(self) -> np.ndarray:
        """Rows ``(a, b, l, a|l, b|l)`` for every ``a <= b`` and ``l`` not in ``b``.

        Restricted to ``|b| < max_size`` so that ``b | {l}`` is an action.
        Used for exhaustive monotonicity and submodularity probes.
        """
        ext = self.extend
        rows = []
        for b, wb in enumerate(self.actions):
            if len(wb) >= self.max_size:
                continue
            subs = [self.index[s] for r in range(len(wb) + 1) for s in combinations(wb, r)]
            for item in range(self.num_items):
                if item in wb:
                    continue
                for a in subs:
                    rows.append((a, b, item, ext[a, item], ext[b, item]))
        return np.array(rows, dtype=np.int64).reshape(-1, 5)
