"""Session simulation and the synthetic recommendation experiment.

A session starts at the prior belief.  Each round the recommender snaps its
belief to the grid, shows the action its policy assigns to that grid point,
and the user (of a hidden true type) either clicks one item or leaves.  The
session length is the number of clicks.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .belief import BeliefNet, as_belief, build_net, posterior, uniform_belief
from .errors import InvalidArgumentError
from .model import UserTypeModel
from .planner import BeliefMdp, value_iteration

log = logging.getLogger(__name__)

ARMS = ("random", "optimal", "greedy", "simple_greedy")
_ARM_OPERATOR = {"optimal": "exact", "greedy": "greedy", "simple_greedy": "simple_greedy"}
_ARM_CODE = {arm: i for i, arm in enumerate(ARMS)}

# item-layout presets: (num_items, type-affine items per type)
PROTOCOLS = {"main": (13, 2), "appendix": (21, 4)}
CSV_COLUMNS = ("arm", "vi_iterations", "repetition", "sessions", "mean_length", "stderr", "seed")


def sample_scores(
    rng: np.random.Generator,
    num_types: int = 4,
    num_items: int = 13,
    affine_per_type: int | None = None,
    generic_items: int = 4,
    shared_generic: bool = False,
    termination: float = 0.5,
) -> UserTypeModel:
    """Draw a score matrix following the synthetic experiment protocol.

    Columns are laid out as ``generic_items`` generic items, then
    ``num_types`` groups of ``affine_per_type`` type-affine items, then any
    leftover columns as additional generic items.  Generic scores are
    U[0, 0.6]; a group-``m`` item scores U[0.5, 1] for type ``m`` and
    U[0, 0.5] for every other type.  With ``shared_generic`` a generic item
    has one score for all types, otherwise one draw per type.

    ``affine_per_type`` defaults to the largest group size that fits; the
    presets leave exactly one extra generic item (13 = 4 + 4*2 + 1 and
    21 = 4 + 4*4 + 1).
    """
    if affine_per_type is None:
        affine_per_type = (num_items - generic_items) // num_types
    n_affine = num_types * affine_per_type
    extra = num_items - generic_items - n_affine
    if affine_per_type < 0 or extra < 0:
        raise InvalidArgumentError(
            f"{num_items} items cannot hold {generic_items} generic + {num_types}x{affine_per_type} affine items"
        )
    M = num_types
    generic_cols = list(range(generic_items)) + list(range(generic_items + n_affine, num_items))
    scores = np.empty((M, num_items))
    n_gen = len(generic_cols)
    if shared_generic:
        scores[:, generic_cols] = np.broadcast_to(rng.uniform(0.0, 0.6, n_gen), (M, n_gen))
    else:
        scores[:, generic_cols] = rng.uniform(0.0, 0.6, (M, n_gen))
    lo = generic_items
    block = rng.uniform(0.0, 0.5, (M, n_affine))
    for m in range(M):
        cols = slice(m * affine_per_type, (m + 1) * affine_per_type)
        block[m, cols] = rng.uniform(0.5, 1.0, affine_per_type)
    scores[:, lo : lo + n_affine] = block
    return UserTypeModel(scores, np.full(M, termination))


@dataclass
class SessionResult:
    length: int
    discounted_reward: float
    items: tuple
    final_belief: np.ndarray
    truncated: bool = False


class TablePolicy:
    """Policy given as one action per grid point."""

    def __init__(self, actions):
        self.actions = [tuple(a) for a in actions]

    def __call__(self, state: int) -> tuple:
        return self.actions[state]


def random_policy(num_items: int, k: int, rng: np.random.Generator):
    """Policy that ignores the state and shows a uniformly random ``k``-subset."""
    if not 0 <= k <= num_items:
        raise InvalidArgumentError(f"k must lie in [0, {num_items}]")

    def policy(state: int) -> tuple:
        return tuple(sorted(int(i) for i in rng.choice(num_items, size=k, replace=False)))

    return policy


def run_session(
    model: UserTypeModel,
    true_type: int,
    policy,
    net: BeliefNet,
    prior,
    gamma: float,
    rng: np.random.Generator,
    max_rounds: int = 10_000,
    exact_belief: bool = False,
) -> SessionResult:
    """Simulate one session of a type-``true_type`` user.

    ``policy`` maps a grid index to an action.  After a click the belief is
    updated from the grid point the action was chosen at, so the simulated
    process is the one the planner solved; ``exact_belief=True`` updates the
    unsnapped belief instead.
    """
    belief = as_belief(prior)
    length, reward, items = 0, 0.0, []
    for t in range(max_rounds):
        s = net.snap(belief)
        w = tuple(policy(s))
        probs = model.choice_probs(true_type, w) if w else np.zeros(0)
        u = rng.random()
        j = int(np.searchsorted(np.cumsum(probs), u, side="right"))
        if j >= len(w):
            return SessionResult(length, reward, tuple(items), belief)
        length += 1
        reward += gamma**t
        items.append(w[j])
        base = belief if exact_belief else net.points[s]
        belief = posterior(model, base, w, w[j])
    return SessionResult(length, reward, tuple(items), belief, truncated=True)


def simulate_batch(
    problem: BeliefMdp,
    policy,
    true_types: np.ndarray,
    start_belief,
    rng: np.random.Generator,
    max_rounds: int = 10_000,
    exact_belief: bool = False,
):
    """Simulate many sessions at once.

    ``policy`` is an array of action indices per grid point, or ``"random"``.
    Returns ``(lengths, truncated)`` arrays.
    """
    table = problem.tabulate()
    P_type = problem.type_probs  # (M, A, k)
    space = table.space
    net = problem.net
    n = len(true_types)
    lengths = np.zeros(n, dtype=np.int64)
    alive = np.ones(n, dtype=bool)
    if exact_belief:
        beliefs = np.tile(as_belief(start_belief), (n, 1))
    states = np.full(n, net.snap(start_belief), dtype=np.int64)
    size_k = space.of_size(space.max_size)
    for _ in range(max_rounds):
        idx = np.flatnonzero(alive)
        if idx.size == 0:
            break
        if exact_belief:
            states[idx] = net.snap_many(beliefs[idx])
        if isinstance(policy, str):
            acts = size_k[rng.integers(0, len(size_k), idx.size)]
        else:
            acts = policy[states[idx]]
        probs = P_type[true_types[idx], acts]  # (n, k)
        cum = np.cumsum(probs, axis=1)
        u = rng.random(idx.size)
        j = (u[:, None] >= cum).sum(axis=1)
        clicked = j < probs.shape[1]
        alive[idx[~clicked]] = False
        hit = idx[clicked]
        jc, ac = j[clicked], acts[clicked]
        lengths[hit] += 1
        if exact_belief:
            lik = np.moveaxis(P_type[:, ac, jc], 0, -1)  # (n, M)
            joint = beliefs[hit] * lik
            beliefs[hit] = joint / joint.sum(axis=1, keepdims=True)
        else:
            states[hit] = table.next_state[states[hit], ac, jc]
    return lengths, alive.copy()


@dataclass
class ExperimentConfig:
    """Settings of a synthetic session-length experiment.

    ``arms`` are solved with exact, pooled-greedy and per-state greedy value
    iteration (``optimal``, ``greedy``, ``simple_greedy``) or act at random.
    Every policy arm is evaluated after each sweep count in ``vi_iterations``.
    """

    num_types: int = 4
    num_items: int = 13
    k: int = 3
    gamma: float = 1.0
    resolution: int = 10
    prior: list | None = None
    arms: tuple = ARMS
    vi_iterations: tuple = (1, 2, 3, 4, 5, 6)
    repetitions: int = 50
    sessions: int = 10_000
    seed: int = 0
    max_rounds: int = 10_000
    affine_per_type: int | None = None
    generic_items: int = 4
    shared_generic: bool = False
    termination: float = 0.5
    exact_belief: bool = False

    def __post_init__(self):
        self.arms = tuple(self.arms)
        self.vi_iterations = tuple(int(t) for t in self.vi_iterations)
        if self.prior is None:
            self.prior = uniform_belief(self.num_types).tolist()
        as_belief(self.prior)
        if len(self.prior) != self.num_types:
            raise InvalidArgumentError("prior length must equal num_types")
        bad = set(self.arms) - set(ARMS)
        if bad:
            raise InvalidArgumentError(f"unknown arms {sorted(bad)}; choose from {ARMS}")
        if self.sessions < 1 or self.repetitions < 1:
            raise InvalidArgumentError("sessions and repetitions must be >= 1")
        if any(t < 0 for t in self.vi_iterations):
            raise InvalidArgumentError("vi_iterations must be non-negative")
        if not 0 <= self.gamma <= 1:
            raise InvalidArgumentError("gamma must lie in [0, 1]")
        if not 0 <= self.k <= self.num_items:
            raise InvalidArgumentError("k must lie in [0, num_items]")

    @classmethod
    def preset(cls, name: str, **overrides) -> "ExperimentConfig":
        """``main`` (13 items) or ``appendix`` (21 items), 4 types, k = 3, gamma = 1."""
        num_items, per = PROTOCOLS[name]
        return cls(**{"num_items": num_items, "affine_per_type": per, **overrides})

    def to_dict(self) -> dict:
        d = asdict(self)
        d["arms"] = list(self.arms)
        d["vi_iterations"] = list(self.vi_iterations)
        return d


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    rows: list = field(default_factory=list)
    summary: list = field(default_factory=list)

    def mean(self, arm: str, t: int = 0) -> dict:
        for row in self.summary:
            if row["arm"] == arm and row["vi_iterations"] == t:
                return row
        raise KeyError((arm, t))

    def to_csv(self, include_repetitions: bool = True) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n", extrasaction="ignore")
        writer.writeheader()
        for row in (self.rows if include_repetitions else []) + self.summary:
            writer.writerow({k: _fmt(v) for k, v in row.items()})
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {"config": self.config.to_dict(), "rows": self.rows, "summary": self.summary}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, default=_fmt)


def _fmt(v):
    return f"{v:.9g}" if isinstance(v, float) else v


def _stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def _run_repetition(config: ExperimentConfig, rep: int) -> list[dict]:
    model = sample_scores(
        _stream(config.seed, rep, 99),
        config.num_types,
        config.num_items,
        config.affine_per_type,
        config.generic_items,
        config.shared_generic,
        config.termination,
    )
    net = build_net(config.num_types, config.resolution)
    problem = BeliefMdp(model, net, config.k)
    prior = np.asarray(config.prior)
    out = []

    def record(arm, t, lengths, truncated):
        n = len(lengths)
        out.append(
            {
                "arm": arm,
                "vi_iterations": t,
                "repetition": rep,
                "sessions": n,
                "mean_length": float(lengths.mean()),
                "stderr": float(lengths.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0,
                "seed": config.seed,
                "sum": int(lengths.sum()),
                "sum_sq": int((lengths.astype(np.int64) ** 2).sum()),
                "truncated": int(truncated.sum()),
            }
        )

    t_max = max(config.vi_iterations, default=0)
    for arm in config.arms:
        if arm == "random":
            rng = _stream(config.seed, rep, _ARM_CODE[arm], 0)
            types = rng.choice(config.num_types, size=config.sessions, p=prior)
            lengths, trunc = simulate_batch(problem, "random", types, prior, rng, config.max_rounds)
            record(arm, 0, lengths, trunc)
            continue
        sol = value_iteration(problem, _ARM_OPERATOR[arm], config.gamma, iterations=t_max, record=True)
        for t in config.vi_iterations:
            rng = _stream(config.seed, rep, _ARM_CODE[arm], t)
            types = rng.choice(config.num_types, size=config.sessions, p=prior)
            lengths, trunc = simulate_batch(
                problem, sol.policy_history[t], types, prior, rng, config.max_rounds, config.exact_belief
            )
            record(arm, t, lengths, trunc)
    log.debug("repetition %d done", rep)
    return out


def run_experiment(config: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    """Run every repetition and aggregate mean session lengths.

    Each repetition draws fresh scores; every (repetition, arm, sweep count)
    uses its own random stream derived from ``config.seed``, so results do not
    depend on ``workers``.  Summary rows pool all sessions of an
    (arm, sweep count) pair and report the standard error of that pooled mean.
    """
    reps = range(config.repetitions)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            chunks = list(pool.map(lambda r: _run_repetition(config, r), reps))
    else:
        chunks = [_run_repetition(config, r) for r in reps]
    rows = [row for chunk in chunks for row in chunk]
    summary = []
    keys = sorted({(r["arm"], r["vi_iterations"]) for r in rows}, key=lambda k: (ARMS.index(k[0]), k[1]))
    for arm, t in keys:
        group = [r for r in rows if r["arm"] == arm and r["vi_iterations"] == t]
        n = sum(r["sessions"] for r in group)
        s1 = sum(r["sum"] for r in group)
        s2 = sum(r["sum_sq"] for r in group)
        mean = s1 / n
        var = (s2 - n * mean * mean) / (n - 1) if n > 1 else 0.0
        summary.append(
            {
                "arm": arm,
                "vi_iterations": t,
                "repetition": "all",
                "sessions": n,
                "mean_length": mean,
                "stderr": float(np.sqrt(max(var, 0.0) / n)),
                "seed": config.seed,
                "repetition_means": [r["mean_length"] for r in group],
                "truncated": sum(r["truncated"] for r in group),
            }
        )
    return ExperimentResult(config, rows, summary)
