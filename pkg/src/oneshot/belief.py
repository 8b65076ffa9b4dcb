"""Beliefs over user types, Bayes updates and the simplex grid.

Beliefs are plain 1-D float arrays on the probability simplex.  The grid of
resolution ``r`` holds every belief whose entries are multiples of ``1/r``;
any belief lies within L1 distance ``2/r`` of some grid point.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from math import comb

import numpy as np

from .actions import normalize_action
from .errors import ImpossibleObservationError, InvalidArgumentError, SizeGuardError
from .model import ChoiceModel

BELIEF_ATOL = 1e-12
MAX_NET_POINTS = 2_000_000
# snapping treats L1 distances closer than this as ties
SNAP_TIE_TOL = 1e-9


def as_belief(weights, atol: float = BELIEF_ATOL) -> np.ndarray:
    """Validate ``weights`` as a point of the simplex and return a float copy."""
    c = np.array(weights, dtype=np.float64).reshape(-1)
    if c.size == 0 or np.any(c < -atol) or np.any(c > 1 + atol) or abs(c.sum() - 1.0) > atol:
        raise InvalidArgumentError(f"not a belief: {weights}")
    return np.clip(c, 0.0, 1.0)


def uniform_belief(num_types: int) -> np.ndarray:
    return np.full(num_types, 1.0 / num_types)


def _type_likelihood(model: ChoiceModel, w, item) -> np.ndarray:
    w = normalize_action(w, model.num_items)
    if not 0 <= item < model.num_items:
        raise InvalidArgumentError(f"item {item} outside [0, {model.num_items})")
    if item not in w:
        return np.zeros(model.num_types)
    j = w.index(item)
    return np.array([model.choice_probs(m, w)[j] for m in range(model.num_types)])


def mixture_choice_prob(model: ChoiceModel, c, w, item: int) -> float:
    """Click probability of ``item`` under belief ``c``: ``sum_m c[m] p(item|m, w)``."""
    c = np.asarray(c, dtype=np.float64)
    if c.shape != (model.num_types,):
        raise InvalidArgumentError("belief length does not match the number of types")
    return float(c @ _type_likelihood(model, w, item))


def posterior(model: ChoiceModel, c, w, item: int) -> np.ndarray:
    """Bayes update of belief ``c`` after a click on ``item`` from display ``w``.

    Raises
    ------
    ImpossibleObservationError
        If the click has probability zero under ``c``.
    """
    c = np.asarray(c, dtype=np.float64)
    if c.shape != (model.num_types,):
        raise InvalidArgumentError("belief length does not match the number of types")
    joint = _type_likelihood(model, w, item) * c
    total = joint.sum()
    if not total > 0:
        raise ImpossibleObservationError(f"click on item {item} from {tuple(w)} has probability 0")
    return joint / total


def compositions(total: int, parts: int) -> np.ndarray:
    """All non-negative integer vectors of length ``parts`` summing to ``total``.

    Rows come out in ascending lexicographic order.
    """
    if parts == 1:
        return np.array([[total]], dtype=np.int64)
    rows = []
    for first in range(total + 1):
        rest = compositions(total - first, parts - 1)
        rows.append(np.column_stack([np.full(len(rest), first, dtype=np.int64), rest]))
    return np.vstack(rows)


@dataclass(frozen=True, eq=False)
class BeliefNet:
    """Rational grid over the simplex with denominator ``resolution``.

    Attributes
    ----------
    counts : ndarray, shape (P, M)
        Integer numerators, lexicographically sorted.
    points : ndarray, shape (P, M)
        ``counts / resolution``.
    index : dict
        Maps a numerator tuple to its row.
    """

    num_types: int
    resolution: int
    counts: np.ndarray = field(repr=False)
    points: np.ndarray = field(repr=False)
    index: dict = field(repr=False)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def covering_radius(self) -> float:
        """L1 distance within which every belief has a grid point."""
        return 2.0 / self.resolution

    def index_of(self, counts) -> int:
        return self.index[tuple(int(x) for x in counts)]

    def snap(self, c) -> int:
        """Index of the grid point closest to ``c`` in L1, by linear scan.

        Ties go to the lexicographically smallest point.
        """
        c = np.asarray(c, dtype=np.float64)
        if c.shape != (self.num_types,):
            raise InvalidArgumentError("belief length does not match the net")
        d = np.abs(self.points - c).sum(axis=1)
        return int(np.flatnonzero(d <= d.min() + SNAP_TIE_TOL)[0])

    def snap_many(self, beliefs) -> np.ndarray:
        """Vectorised :meth:`snap` for an array of beliefs (last axis = types).

        Uses largest-remainder rounding: every L1-nearest grid point takes
        floor or ceiling of ``r * c`` in each coordinate, with the ceilings on
        the largest fractional parts.  Among tied fractional parts the later
        coordinates are rounded up, which gives the lexicographically smallest
        nearest point.
        """
        c = np.asarray(beliefs, dtype=np.float64)
        shape = c.shape[:-1]
        c = c.reshape(-1, self.num_types)
        r = self.resolution
        y = c * r
        base = np.floor(y)
        frac = np.round(y - base, 9)
        need = np.rint(r - base.sum(axis=1)).astype(np.int64)
        cols = np.arange(self.num_types)
        # sort by fractional part descending, then by column descending
        order = np.lexsort((-np.broadcast_to(cols, frac.shape), -frac), axis=1)
        rank = np.empty_like(order)
        np.put_along_axis(rank, order, cols[None, :].repeat(len(c), 0), axis=1)
        n = base.astype(np.int64) + (rank < need[:, None])
        return np.searchsorted(self._keys, self._key(n)).reshape(shape)

    def _key(self, counts: np.ndarray) -> np.ndarray:
        # mixed-radix code, first coordinate most significant, so order is lexicographic
        radix = (self.resolution + 1) ** np.arange(self.num_types - 1, -1, -1, dtype=np.int64)
        return counts @ radix

    @cached_property
    def _keys(self) -> np.ndarray:
        return self._key(self.counts)


def build_net(num_types: int, resolution: int, max_points: int = MAX_NET_POINTS) -> BeliefNet:
    """Grid of beliefs with entries in ``{0, 1/r, ..., 1}``.

    Has ``C(r + M - 1, M - 1)`` points.
    """
    if num_types < 1 or resolution < 1:
        raise InvalidArgumentError("num_types and resolution must be positive")
    size = comb(resolution + num_types - 1, num_types - 1)
    if size > max_points:
        raise SizeGuardError(f"net would have {size} points, cap is {max_points}")
    counts = compositions(resolution, num_types)
    counts.flags.writeable = False
    points = counts / resolution
    points.flags.writeable = False
    index = {tuple(row): i for i, row in enumerate(counts.tolist())}
    return BeliefNet(num_types, resolution, counts, points, index)
