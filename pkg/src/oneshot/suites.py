"""Seeded batteries of numerical checks over random small instances.

Every suite returns a JSON-ready dict with at least ``suite``, ``passed``,
``gated`` (False for report-only suites) and ``instances``.  Instance ``i`` of
a suite draws from ``SeedSequence(seed, spawn_key=(i,))`` so results depend
only on ``seed`` and the instance count.
"""

from __future__ import annotations

import time
from math import inf

import numpy as np

from .belief import as_belief, build_net, posterior
from .finite_mdp import counterexample_rows
from .model import UserTypeModel, assumption_b, check_iia
from .theory import (
    check_nemhauser,
    check_reward_structure,
    check_theorem1,
    check_theorem2,
    conforming_model,
    coverage_function,
    greedy_q_probe,
    mixture_posterior_residual,
    value_bound_violation,
)

TOL = 1e-9
IIA_TOL = 1e-12


def _rng(seed: int, i: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(i,)))


def ratio_model(rng, num_types: int, num_items: int) -> UserTypeModel:
    """Unconstrained ratio model: scores U[0, 1], termination scores U[0.05, 1]."""
    return UserTypeModel(rng.uniform(0.0, 1.0, (num_types, num_items)), rng.uniform(0.05, 1.0, num_types))


def _small_sizes(rng, max_types=3, max_items=7, max_k=3, max_res=6, max_t=5):
    M = int(rng.integers(2, max_types + 1))
    L = int(rng.integers(3, max_items + 1))
    k = int(rng.integers(1, min(max_k, L) + 1))
    r = int(rng.integers(2, max_res + 1))
    t = int(rng.integers(1, max_t + 1))
    gamma = float(rng.uniform(0.3, 1.0))
    return M, L, k, r, t, gamma


def domination(seed: int = 0, instances: int = 20) -> dict:
    """Pooled-greedy VI never exceeds exact VI, on unconstrained ratio models."""
    worst, failures = -inf, []
    for i in range(instances):
        rng = _rng(seed, i)
        M, L, k, r, t, gamma = _small_sizes(rng)
        rep = check_theorem1(ratio_model(rng, M, L), k, gamma, t, r)
        res = float(rep.upper_residual.max())
        worst = max(worst, res)
        if res > TOL:
            failures.append(i)
    return {"suite": "domination", "gated": True, "instances": instances, "passed": not failures,
            "max_residual": worst, "failures": failures}


def lower_bound(seed: int = 0, instances: int = 20) -> dict:
    """Lower value bound on conforming (B >= 2) instances under both beta readings."""
    worst = {"limit": -inf, "k_dependent": -inf}
    fails = {"limit": [], "k_dependent": []}
    for i in range(instances):
        rng = _rng(seed, i)
        M, L, k, r, t, gamma = _small_sizes(rng)
        model = conforming_model(rng, M, L, k)
        rep = check_theorem1(model, k, gamma, t, r)
        assert rep.hypothesis_met
        for name, d in rep.lower.items():
            res = float(d["residual"].max())
            worst[name] = max(worst[name], res)
            if res > TOL:
                fails[name].append(i)
    return {"suite": "lower_bound", "gated": True, "instances": instances, "passed": not fails["limit"],
            "max_residual": worst, "failures": fails}


def iia(seed: int = 0, instances: int = 50) -> dict:
    worst, failures = 0.0, []
    for i in range(instances):
        rng = _rng(seed, i)
        L = int(rng.integers(2, 7))
        k = int(rng.integers(1, min(3, L) + 1))
        rep = check_iia(ratio_model(rng, int(rng.integers(1, 4)), L), k)
        worst = max(worst, rep.max_residual)
        if not rep.max_residual < IIA_TOL:
            failures.append(i)
    return {"suite": "iia", "gated": True, "instances": instances, "passed": not failures,
            "max_residual": worst, "failures": failures}


def reward_structure(seed: int = 0, instances: int = 50) -> dict:
    """Continuation probability is monotone and submodular (same corpus as ``iia``)."""
    worst_mono = worst_sub = -inf
    failures = []
    for i in range(instances):
        rng = _rng(seed, i)
        L = int(rng.integers(2, 7))
        k = int(rng.integers(1, min(3, L) + 1))
        mono, sub = check_reward_structure(ratio_model(rng, int(rng.integers(1, 4)), L), k)
        worst_mono, worst_sub = max(worst_mono, mono), max(worst_sub, sub)
        if mono > IIA_TOL or sub > IIA_TOL:
            failures.append(i)
    return {"suite": "reward_structure", "gated": True, "instances": instances, "passed": not failures,
            "max_monotonicity_violation": worst_mono, "max_submodularity_violation": worst_sub,
            "failures": failures}


def nemhauser(seed: int = 0, instances: int = 100, num_items: int = 10, k: int = 3) -> dict:
    """Greedy on random coverage functions against brute force, exact submodularity."""
    failures, ratios = [], []
    for i in range(instances):
        f = coverage_function(_rng(seed, i), num_items)
        rep = check_nemhauser(f, num_items, k, theta=0.0, epsilon=0.0)
        ratios.append(rep.greedy_value / rep.optimum if rep.optimum > 0 else 1.0)
        if not rep.holds("classical"):
            failures.append(i)
    return {"suite": "nemhauser", "gated": True, "instances": instances, "passed": not failures,
            "min_ratio": min(ratios), "factor": 1 - (1 - 1 / k) ** k, "failures": failures}


def structure(seed: int = 0, instances: int = 20) -> dict:
    """Posterior normalisation, snap idempotence, value bound and greedy-Q monotonicity."""
    post_err = mix_err = 0.0
    snap_ok = True
    vb_worst, mono_worst, mono_checked = -inf, -inf, 0
    for i in range(instances):
        rng = _rng(seed, i)
        M, L, k, r, t, gamma = _small_sizes(rng)
        model = ratio_model(rng, M, L)
        net = build_net(M, r)
        idx = np.arange(len(net))
        snap_ok &= bool(np.array_equal(net.snap_many(net.points), idx))
        snap_ok &= all(net.snap(p) == j for j, p in enumerate(net.points))
        for _ in range(10):
            c = as_belief(rng.dirichlet(np.ones(M)))
            w = tuple(sorted(rng.choice(L, size=k, replace=False).tolist()))
            mix_err = max(mix_err, mixture_posterior_residual(model, c, w))
            for item in w:
                post_err = max(post_err, abs(posterior(model, c, w, item).sum() - 1.0))
        if assumption_b(model, k) > gamma:
            vb_worst = max(vb_worst, max(value_bound_violation(model, k, gamma, t, r).values()))
        steep = conforming_model(rng, M, L, k)
        if assumption_b(steep, k) >= 1 + gamma:
            mono_checked += 1
            probes = greedy_q_probe(steep, k, gamma, t, r)
            mono_worst = max(mono_worst, max(p.max_monotonicity_violation for p in probes))
    passed = post_err <= 1e-12 and mix_err <= 1e-12 and snap_ok and vb_worst <= TOL and mono_worst <= TOL
    return {"suite": "structure", "gated": True, "instances": instances, "passed": bool(passed),
            "posterior_normalisation_error": post_err, "mixture_identity_error": mix_err,
            "snap_idempotent": snap_ok, "max_value_bound_excess": vb_worst,
            "max_greedy_q_monotonicity_violation": mono_worst, "monotonicity_instances": mono_checked}


def discretisation(seed: int = 0, instances: int = 5) -> dict:
    """Report-only: coarse-grid greedy VI against a fine-grid exact reference."""
    reports = []
    for i in range(instances):
        rng = _rng(seed, i)
        model = conforming_model(rng, 2, int(rng.integers(3, 6)), 2)
        gamma = float(rng.uniform(0.3, 1.0))
        reports.append([check_theorem2(model, 2, gamma, 4, r, 16).to_dict() for r in (2, 4, 8)])
    return {"suite": "discretisation", "gated": False, "instances": instances, "passed": True,
            "reports": reports}


def counterexample(seed: int = 0, instances: int = 1) -> dict:
    rows = counterexample_rows()
    return {"suite": "counterexample", "gated": True, "instances": 1,
            "passed": all(r["passed"] for r in rows), "rows": rows}


SUITES = {
    "domination": domination,
    "lower_bound": lower_bound,
    "iia": iia,
    "reward_structure": reward_structure,
    "nemhauser": nemhauser,
    "structure": structure,
    "discretisation": discretisation,
    "counterexample": counterexample,
}
# ``check`` with no selector runs these; the counterexample has its own subcommand
DEFAULT_SUITES = tuple(s for s in SUITES if s != "counterexample")


def run_suite(name: str, seed: int = 0, instances: int | None = None) -> dict:
    fn = SUITES[name]
    start = time.perf_counter()
    out = fn(seed) if instances is None else fn(seed, instances)
    out["runtime_s"] = time.perf_counter() - start
    return out
