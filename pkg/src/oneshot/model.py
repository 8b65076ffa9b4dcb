"""Per-type user choice models and checks of the behavioural assumptions.

A user of type ``m`` shown a set ``w`` either clicks one item of ``w`` or
ends the session.  The ratio model gives item ``l`` probability

    score[m, l] / (sum(score[m, j] for j in w) + termination[m])

and items outside ``w`` probability zero.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations
from math import comb, inf

import numpy as np

from .actions import ActionSpace, normalize_action
from .errors import InvalidArgumentError, SizeGuardError

IIA_WORK_CAP = 10**7


class ChoiceModel:
    """Common interface of the ratio model and the raw probability table."""

    num_types: int
    num_items: int

    def choice_probs(self, m: int, w) -> np.ndarray:
        """Click probabilities of the items of ``sorted(w)``, in that order."""
        raise NotImplementedError

    def _check_type(self, m):
        if not 0 <= m < self.num_types:
            raise InvalidArgumentError(f"type index {m} outside [0, {self.num_types})")

    def choice_prob(self, m: int, w, item: int) -> float:
        """Probability that a type-``m`` user shown ``w`` clicks ``item``."""
        w = normalize_action(w, self.num_items)
        if not 0 <= item < self.num_items:
            raise InvalidArgumentError(f"item {item} outside [0, {self.num_items})")
        if item not in w:
            return 0.0
        return float(self.choice_probs(m, w)[w.index(item)])

    def continuation_prob(self, m: int, w) -> float:
        """Probability that a type-``m`` user shown ``w`` clicks anything."""
        w = normalize_action(w, self.num_items)
        if not w:
            self._check_type(m)
            return 0.0
        return float(self.choice_probs(m, w).sum())


@dataclass(frozen=True, eq=False)
class UserTypeModel(ChoiceModel):
    """Ratio choice model with per-type item scores and termination scores.

    Parameters
    ----------
    scores : array_like, shape (M, L)
        Non-negative item scores per user type.
    termination_scores : array_like, shape (M,)
        Positive termination score per user type.
    """

    scores: np.ndarray
    termination_scores: np.ndarray
    num_types: int = field(init=False)
    num_items: int = field(init=False)

    def __post_init__(self):
        scores = np.array(self.scores, dtype=np.float64)
        term = np.array(self.termination_scores, dtype=np.float64).reshape(-1)
        if scores.ndim != 2 or scores.shape[0] < 1 or scores.shape[1] < 1:
            raise InvalidArgumentError(f"scores must be a non-empty matrix, got shape {scores.shape}")
        if term.shape != (scores.shape[0],):
            raise InvalidArgumentError("need one termination score per type")
        if not np.all(np.isfinite(scores)) or np.any(scores < 0):
            raise InvalidArgumentError("scores must be finite and non-negative")
        if not np.all(np.isfinite(term)) or np.any(term <= 0):
            raise InvalidArgumentError("termination scores must be finite and positive")
        scores.flags.writeable = False
        term.flags.writeable = False
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "termination_scores", term)
        object.__setattr__(self, "num_types", scores.shape[0])
        object.__setattr__(self, "num_items", scores.shape[1])

    def choice_probs(self, m, w):
        self._check_type(m)
        w = normalize_action(w, self.num_items)
        s = self.scores[m, list(w)]
        return s / (s.sum() + self.termination_scores[m])

    def action_choice_probs(self, space: ActionSpace) -> np.ndarray:
        """Click probabilities for every action of ``space``.

        Returns an array ``P[m, a, j]`` holding the probability that a type-``m``
        user clicks the ``j``-th item of action ``a``; padding slots are 0.
        """
        mask = space.items >= 0
        s = np.where(mask, self.scores[:, np.maximum(space.items, 0)], 0.0)
        denom = s.sum(axis=2) + self.termination_scores[:, None]
        return s / denom[:, :, None]

    def max_continuation(self, k: int) -> np.ndarray:
        """Per-type largest continuation probability over actions of size <= k."""
        top = -np.sort(-self.scores, axis=1)[:, :k].sum(axis=1)
        return top / (top + self.termination_scores)

    def to_dict(self) -> dict:
        return {
            "num_types": self.num_types,
            "num_items": self.num_items,
            "scores": self.scores.tolist(),
            "termination_scores": self.termination_scores.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "UserTypeModel":
        model = cls(np.array(data["scores"], dtype=np.float64), data["termination_scores"])
        if (data.get("num_types", model.num_types), data.get("num_items", model.num_items)) != (
            model.num_types,
            model.num_items,
        ):
            raise InvalidArgumentError("num_types/num_items disagree with the score matrix")
        return model

    def dumps(self) -> str:
        # json writes float repr, which round-trips float64 exactly
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def loads(cls, text: str) -> "UserTypeModel":
        return cls.from_dict(json.loads(text))


class ChoiceTable(ChoiceModel):
    """Choice model given directly as a table of click probabilities.

    ``table`` maps ``(m, w)`` with ``w`` a sorted item tuple to the click
    probabilities of the items of ``w`` in order.  It does not have to satisfy
    any independence structure, which makes it useful for building violations.
    """

    def __init__(self, num_types: int, num_items: int, table: dict):
        self.num_types = num_types
        self.num_items = num_items
        self._table = {}
        for (m, w), probs in table.items():
            self._check_type(m)
            w = normalize_action(w, num_items)
            p = np.asarray(probs, dtype=np.float64)
            if p.shape != (len(w),) or np.any(p < 0) or p.sum() > 1 + 1e-12:
                raise InvalidArgumentError(f"bad probabilities for type {m}, action {w}: {probs}")
            self._table[m, w] = p

    @classmethod
    def from_model(cls, model: ChoiceModel, max_size: int) -> "ChoiceTable":
        table = {
            (m, w): model.choice_probs(m, w)
            for m in range(model.num_types)
            for size in range(1, max_size + 1)
            for w in combinations(range(model.num_items), size)
        }
        return cls(model.num_types, model.num_items, table)

    def choice_probs(self, m, w):
        self._check_type(m)
        w = normalize_action(w, self.num_items)
        if not w:
            return np.zeros(0)
        try:
            return self._table[m, w]
        except KeyError:
            raise InvalidArgumentError(f"no probabilities tabulated for type {m}, action {w}") from None

    def set(self, m: int, w, probs) -> None:
        """Overwrite one row of the table."""
        w = normalize_action(w, self.num_items)
        self._table[m, w] = np.asarray(probs, dtype=np.float64)


def assumption_b(model: ChoiceModel, k: int) -> float:
    """Largest ``B`` with continuation probability ``<= 1/B`` for every belief and action.

    Continuation under a belief is linear in the belief, so the worst case sits
    at a vertex and ``B = 1 / max_{m, |w| <= k} continuation(m, w)``.  Returns
    ``inf`` when no action can ever be clicked.
    """
    if not 0 <= k <= model.num_items:
        raise InvalidArgumentError(f"k must lie in [0, {model.num_items}]")
    if isinstance(model, UserTypeModel):
        worst = float(model.max_continuation(k).max()) if k else 0.0
        if model.num_items <= 12:
            # the top-k shortcut must agree with enumeration
            assert abs(worst - _enumerated_max_continuation(model, k)) <= 1e-12
    else:
        worst = _enumerated_max_continuation(model, k)
    return inf if worst <= 0 else 1.0 / worst


def _enumerated_max_continuation(model: ChoiceModel, k: int) -> float:
    return max(
        (
            model.continuation_prob(m, w)
            for m in range(model.num_types)
            for size in range(1, k + 1)
            for w in combinations(range(model.num_items), size)
        ),
        default=0.0,
    )


@dataclass
class IIAReport:
    """Largest violation of the quantitative IIA identity and where it occurs."""

    max_residual: float
    argmax: tuple | None  # (type, w, item, added item)
    checked: int


def check_iia(model: ChoiceModel, k: int, work_cap: int = IIA_WORK_CAP, samples: int | None = None, rng=None) -> IIAReport:
    """Exhaustively evaluate ``|p(l|w) - p(l|w+l') - p(l'|w+l') p(l|w)|``.

    Every type, every ``w`` with ``|w| <= k``, every ``l`` in ``w`` and every
    ``l'`` outside ``w`` is visited.  Raises :class:`SizeGuardError` when
    ``C(|L|, k) * |L|**2`` exceeds ``work_cap``.  With ``samples`` set, that
    many random ``(m, w, l, l')`` tuples are drawn from ``rng`` instead and no
    guard applies.
    """
    n = model.num_items
    if not 0 <= k <= n:
        raise InvalidArgumentError(f"k must lie in [0, {n}]")
    if samples is not None:
        return _sampled_iia(model, k, samples, np.random.default_rng(rng))
    work = comb(n, k) * n * n
    if work > work_cap:
        raise SizeGuardError(f"IIA enumeration needs ~{work} evaluations, cap is {work_cap}")
    worst, where, checked = 0.0, None, 0
    for m in range(model.num_types):
        for size in range(k + 1):
            for w in combinations(range(n), size):
                if not w:
                    continue
                p_w = model.choice_probs(m, w)
                for extra in range(n):
                    if extra in w:
                        continue
                    w2 = tuple(sorted(w + (extra,)))
                    p_w2 = model.choice_probs(m, w2)
                    p_extra = p_w2[w2.index(extra)]
                    for j, item in enumerate(w):
                        r = abs(p_w[j] - p_w2[w2.index(item)] - p_extra * p_w[j])
                        checked += 1
                        if where is None or r > worst:
                            worst, where = r, (m, w, item, extra)
    return IIAReport(float(worst), where, checked)


def _iia_residual(model, m, w, item, extra):
    p_w = model.choice_probs(m, w)
    w2 = tuple(sorted(w + (extra,)))
    p_w2 = model.choice_probs(m, w2)
    j = w.index(item)
    return abs(p_w[j] - p_w2[w2.index(item)] - p_w2[w2.index(extra)] * p_w[j])


def _sampled_iia(model, k, samples, rng):
    n = model.num_items
    worst, where = 0.0, None
    if k < 1 or n < 2:
        return IIAReport(0.0, None, 0)
    for _ in range(samples):
        size = int(rng.integers(1, min(k, n - 1) + 1))
        picks = rng.choice(n, size=size + 1, replace=False).tolist()
        w, extra = tuple(sorted(picks[:-1])), picks[-1]
        item = w[int(rng.integers(len(w)))]
        m = int(rng.integers(model.num_types))
        r = _iia_residual(model, m, w, item, extra)
        if where is None or r > worst:
            worst, where = r, (m, w, item, extra)
    return IIAReport(float(worst), where, samples)
