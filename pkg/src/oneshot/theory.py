"""Numerical checks of the greedy value-iteration guarantees.

Quantities evaluated per grid point ``c``:

* ``rho(c)``: best belief-weighted continuation probability over size-k sets.
* ``theta_bar(c)``: bound on the submodularity slack of the greedy Q function.
* ``omega(t, c)``: slack accumulated over ``t`` sweeps,
  ``sum_{i<t} (beta gamma rho)^i (k - 1) theta_bar``.

``check_theorem1`` runs exact VI (at ``gamma`` and ``beta * gamma``) and
pooled-greedy VI from zero and evaluates

    greedy_t <= exact_t
    beta * (exact_t[beta * gamma] - omega(t)) <= greedy_t

at every grid point.  All value functions come from the planner's shared Q
evaluation, so comparisons carry no independent rounding.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from math import comb, e, inf

import numpy as np

from .belief import build_net
from .errors import InvalidArgumentError, SizeGuardError
from .model import UserTypeModel, assumption_b
from .planner import BeliefMdp, greedy_argmax, value_iteration
from .finite_mdp import q_probe

BETA_LIMIT = 1.0 - 1.0 / e
TOL = 1e-9


def beta(k: int, conservative: bool = False) -> float:
    """Greedy approximation factor ``1 - (1 - 1/k)^(k + 1)``, or ``1 - 1/e``."""
    if k < 1:
        raise InvalidArgumentError("k must be >= 1")
    if conservative:
        return BETA_LIMIT
    return 1.0 - (1.0 - 1.0 / k) ** (k + 1)


def classical_beta(k: int) -> float:
    """``1 - (1 - 1/k)^k``, the factor the greedy induction actually delivers."""
    if k < 1:
        raise InvalidArgumentError("k must be >= 1")
    return 1.0 - (1.0 - 1.0 / k) ** k


def _continuations(model: UserTypeModel, k: int):
    """Per-type continuation of every size-k set: ``(sets, cont[M, n_sets])``."""
    sets = list(combinations(range(model.num_items), k))
    idx = np.array(sets, dtype=np.int64).reshape(len(sets), k)
    tot = model.scores[:, idx].sum(axis=2)
    return sets, tot / (tot + model.termination_scores[:, None])


def rho(model: UserTypeModel, c, k: int) -> float:
    """``max_{|w| = k} sum_m c[m] continuation(m, w)``, by enumeration."""
    return float(rho_many(model, np.asarray(c)[None, :], k)[0])


def rho_many(model: UserTypeModel, C: np.ndarray, k: int) -> np.ndarray:
    _, cont = _continuations(model, k)
    return (np.asarray(C) @ cont).max(axis=1)


def theta_bar(model: UserTypeModel, c, gamma: float, B: float, k: int) -> float:
    """``max_{l' not in w, |w| = k} sum_m c[m] p(l'|m, w + l') continuation(m, w) gamma / (B - gamma)``."""
    return float(theta_bar_many(model, np.asarray(c)[None, :], gamma, B, k)[0])


def theta_bar_many(model: UserTypeModel, C: np.ndarray, gamma: float, B: float, k: int) -> np.ndarray:
    if B <= gamma:
        raise InvalidArgumentError(f"need B > gamma, got B={B}, gamma={gamma}")
    if gamma == 0 or B == inf:
        return np.zeros(len(C))
    sets, cont = _continuations(model, k)
    idx = np.array(sets, dtype=np.int64).reshape(len(sets), k)
    S = model.scores
    tot = S[:, idx].sum(axis=2)  # (M, n_sets)
    member = np.zeros((len(sets), model.num_items), dtype=bool)
    for r, w in enumerate(sets):
        member[r, list(w)] = True
    # p(l' | m, w + l') for l' outside w; adding a member is a no-op with no slack
    denom = tot[..., None] + S[:, None, :] + model.termination_scores[:, None, None]
    p_add = np.where(member[None], 0.0, S[:, None, :] / denom)  # (M, n_sets, L)
    weight = p_add * cont[..., None]
    vals = np.einsum("cm,msl->csl", np.asarray(C), weight)
    return vals.reshape(len(C), -1).max(axis=1) * gamma / (B - gamma)


def omega(t: int, rho_c, theta_c, k: int, gamma: float, beta_value: float):
    """``sum_{i=0}^{t-1} (beta gamma rho)^i (k - 1) theta_bar``."""
    ratio = beta_value * gamma * np.asarray(rho_c, dtype=np.float64)
    series = sum(ratio**i for i in range(t)) if t > 0 else np.zeros_like(ratio)
    return series * (k - 1) * np.asarray(theta_c, dtype=np.float64)


def lambda_bound(rho_c, theta_c, k: int):
    """``(k - 1) theta_bar / rho``; ``inf`` where ``rho`` is zero (vacuous)."""
    rho_c = np.asarray(rho_c, dtype=np.float64)
    num = (k - 1) * np.asarray(theta_c, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(rho_c > 0, num / np.where(rho_c > 0, rho_c, 1.0), inf)
    return out if out.ndim else float(out)


def heuristic_lambda(B: float, gamma: float) -> float:
    """Rough estimate ``gamma / (B (B - gamma))`` of the relative slack."""
    return gamma / (B * (B - gamma))


@dataclass
class TheoremReport:
    """Per-grid-point quantities and residuals of the two value inequalities.

    Residuals are ``lhs - rhs``; an inequality holds where its residual is
    ``<= TOL``.  ``lower`` holds one entry per beta reading.
    """

    t: int
    gamma: float
    k: int
    B: float
    hypothesis_met: bool
    rho: np.ndarray
    theta_bar: np.ndarray
    lambda_bound: np.ndarray
    greedy_values: np.ndarray
    exact_values: np.ndarray
    upper_residual: np.ndarray
    lower: dict = field(default_factory=dict)

    @property
    def upper_ok(self) -> bool:
        return bool(self.upper_residual.max(initial=-inf) <= TOL)

    def lower_ok(self, reading: str = "limit") -> bool:
        return bool(self.lower[reading]["residual"].max(initial=-inf) <= TOL)

    @property
    def passed(self) -> bool:
        """Upper bound holds and, when B >= 2, the lower bound holds with ``1 - 1/e``."""
        return self.upper_ok and (not self.hypothesis_met or self.lower_ok("limit"))

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "gamma": self.gamma,
            "k": self.k,
            "B": self.B,
            "hypothesis_met": self.hypothesis_met,
            "upper_max_residual": float(self.upper_residual.max(initial=-inf)),
            "upper_ok": self.upper_ok,
            "lower": {
                name: {
                    "beta": d["beta"],
                    "max_residual": float(d["residual"].max(initial=-inf)),
                    "ok": self.lower_ok(name),
                    "omega": d["omega"].tolist(),
                }
                for name, d in self.lower.items()
            },
            "rho": self.rho.tolist(),
            "theta_bar": self.theta_bar.tolist(),
            "lambda_bound": [x if np.isfinite(x) else None for x in self.lambda_bound.tolist()],
            "greedy_values": self.greedy_values.tolist(),
            "exact_values": self.exact_values.tolist(),
            "passed": self.passed,
        }


def check_theorem1(model: UserTypeModel, k: int, gamma: float, t: int, resolution: int = 6) -> TheoremReport:
    """Evaluate both value inequalities after ``t`` sweeps on a grid of ``resolution``.

    The lower bound is only asserted when ``B >= 2``; otherwise it is still
    computed but ``hypothesis_met`` is False.
    """
    if t < 1:
        raise InvalidArgumentError("t must be >= 1")
    net = build_net(model.num_types, resolution)
    problem = BeliefMdp(model, net, k)
    B = assumption_b(model, k)
    greedy_v = value_iteration(problem, "greedy", gamma, iterations=t).values
    exact_v = value_iteration(problem, "exact", gamma, iterations=t).values
    C = net.points
    r = rho_many(model, C, k)
    th = theta_bar_many(model, C, gamma, B, k) if B > gamma else np.full(len(C), inf)
    report = TheoremReport(
        t, gamma, k, B, B >= 2, r, th, lambda_bound(r, th, k), greedy_v, exact_v, greedy_v - exact_v
    )
    for name, b in (("limit", beta(k, conservative=True)), ("k_dependent", beta(k))):
        scaled = value_iteration(problem, "exact", b * gamma, iterations=t).values
        om = omega(t, r, th, k, gamma, b)
        report.lower[name] = {"beta": b, "omega": om, "residual": b * (scaled - om) - greedy_v}
    return report


@dataclass
class Theorem2Report:
    """Discretisation gap of pooled-greedy VI on a coarse grid.

    ``gap`` is the coarse greedy value minus the fine-grid exact value at each
    coarse grid point; ``bound`` is ``eps_d * sum_{i<t} (gamma/B)^i`` with
    ``eps = 2 / resolution``.
    """

    resolution: int
    reference_resolution: int
    epsilon: float
    epsilon_d: float
    bound: float
    gap: np.ndarray

    @property
    def max_gap(self) -> float:
        return float(self.gap.max(initial=0.0))

    @property
    def within_bound(self) -> bool:
        return float(np.abs(self.gap).max(initial=0.0)) <= self.bound + TOL

    def to_dict(self) -> dict:
        return {
            "resolution": self.resolution,
            "reference_resolution": self.reference_resolution,
            "epsilon": self.epsilon,
            "epsilon_d": self.epsilon_d,
            "bound": self.bound,
            "max_gap": self.max_gap,
            "max_abs_gap": float(np.abs(self.gap).max(initial=0.0)),
            "within_bound": self.within_bound,
        }


def check_theorem2(
    model: UserTypeModel,
    k: int,
    gamma: float,
    t: int,
    resolution: int,
    reference_resolution: int,
    operator: str = "greedy",
) -> Theorem2Report:
    """Compare coarse-grid VI (pooled greedy by default) against exact VI on a finer grid.

    ``reference_resolution`` must be a multiple of ``resolution`` so every
    coarse point is also a fine point.  With ``operator="exact"`` the gap is
    pure discretisation error.
    """
    if reference_resolution % resolution:
        raise InvalidArgumentError("reference_resolution must be a multiple of resolution")
    B = assumption_b(model, k)
    coarse = build_net(model.num_types, resolution)
    fine = build_net(model.num_types, reference_resolution)
    v_gd = value_iteration(BeliefMdp(model, coarse, k), operator, gamma, iterations=t).values
    v_ref = value_iteration(BeliefMdp(model, fine, k), "exact", gamma, iterations=t).values
    scale = reference_resolution // resolution
    at = np.array([fine.index_of(row * scale) for row in coarse.counts])
    eps = coarse.covering_radius
    if B == inf:
        eps_d, bound = 0.0, 0.0
    else:
        eps_d = eps / (B - gamma) + 2 * eps * gamma / (B - gamma) ** 2
        bound = eps_d * sum((gamma / B) ** i for i in range(t))
    return Theorem2Report(resolution, reference_resolution, eps, eps_d, bound, v_gd - v_ref[at])


@dataclass
class NemhauserReport:
    greedy_value: float
    optimum: float
    theta: float
    epsilon: float
    k: int
    bounds: dict

    def holds(self, reading: str = "classical") -> bool:
        return self.greedy_value >= self.bounds[reading] - TOL

    def to_dict(self) -> dict:
        return {
            "greedy_value": self.greedy_value,
            "optimum": self.optimum,
            "theta": self.theta,
            "epsilon": self.epsilon,
            "k": self.k,
            "bounds": self.bounds,
            "holds": {name: self.holds(name) for name in self.bounds},
        }


def set_function_slacks(f, num_items: int, max_size: int | None = None, work_cap: int = 10**7):
    """Smallest ``(theta, eps)`` making ``f`` almost submodular and almost monotone.

    ``eps = max f(w) - f(w + l)`` and
    ``theta = max [f(b + l) - f(b)] - [f(a + l) - f(a)]`` over ``a <= b`` with
    ``|b| <= max_size``, clipped at zero.
    """
    n = num_items
    max_size = n if max_size is None else max_size
    work = sum(comb(n, s) * 2**s for s in range(max_size + 1)) * n
    if work > work_cap:
        raise SizeGuardError(f"slack enumeration needs ~{work} evaluations, cap is {work_cap}")
    value = {}

    def g(mask):
        if mask not in value:
            value[mask] = f(tuple(i for i in range(n) if mask >> i & 1))
        return value[mask]

    theta = eps = 0.0
    for size in range(max_size + 1):
        for wb in combinations(range(n), size):
            b = sum(1 << i for i in wb)
            subs = [sum(1 << i for i in s) for r in range(size + 1) for s in combinations(wb, r)]
            for item in range(n):
                bit = 1 << item
                gain_b = g(b | bit) - g(b)
                eps = max(eps, -gain_b)
                if b & bit:
                    continue
                for a in subs:
                    theta = max(theta, gain_b - (g(a | bit) - g(a)))
    return theta, eps


def check_nemhauser(f, num_items: int, k: int, theta: float | None = None, epsilon: float | None = None, work_cap: int = 10**7):
    """Compare greedy maximisation of ``f`` with brute force over size-``k`` sets.

    Slacks not supplied are measured exhaustively over sets of size
    ``<= 2k - 1``, the largest sets the greedy argument touches.  Bounds are
    reported for the classical factor ``1 - (1 - 1/k)^k``, the
    ``1 - (1 - 1/k)^(k + 1)`` reading and ``1 - 1/e``.
    """
    if num_items > 14:
        raise SizeGuardError("brute-force optimum limited to 14 items")
    if abs(f(())) > TOL:
        raise InvalidArgumentError("f must vanish on the empty set")
    if theta is None or epsilon is None:
        m_theta, m_eps = set_function_slacks(f, num_items, min(num_items, 2 * k - 1), work_cap)
        theta = m_theta if theta is None else theta
        epsilon = m_eps if epsilon is None else epsilon
    _, g_val = greedy_argmax(f, num_items, k)
    opt = max(f(w) for w in combinations(range(num_items), k))
    core = opt - (k - 1) * theta - k * epsilon
    bounds = {
        "classical": classical_beta(k) * core,
        "k_dependent": beta(k) * core,
        "limit": BETA_LIMIT * core,
    }
    return NemhauserReport(float(g_val), float(opt), float(theta), float(epsilon), k, bounds)


def coverage_function(rng: np.random.Generator, num_items: int, universe: int = 20, density: float = 0.2):
    """Random weighted coverage function (monotone submodular, zero on the empty set)."""
    cover = rng.random((num_items, universe)) < density
    weights = rng.uniform(0.1, 1.0, universe)

    def f(w):
        if not w:
            return 0.0
        return float(weights[cover[list(w)].any(axis=0)].sum())

    return f


def check_reward_structure(model: UserTypeModel, k: int):
    """Largest monotonicity and submodularity violations of per-type continuation.

    Visits every type, every ``a <= b`` with ``|b| <= k`` and ``l`` outside ``b``.
    Returns ``(max_monotonicity_violation, max_submodularity_violation)``;
    both should be ``<= 0`` for the ratio model.
    """
    n = model.num_items
    mono = sub = -inf
    for m in range(model.num_types):
        cont = {}

        def h(w):
            if w not in cont:
                cont[w] = model.continuation_prob(m, w)
            return cont[w]

        for size in range(min(k, n - 1) + 1):
            for wb in combinations(range(n), size):
                for item in range(n):
                    if item in wb:
                        continue
                    gain_b = h(tuple(sorted(wb + (item,)))) - h(wb)
                    mono = max(mono, -gain_b)
                    for r in range(size + 1):
                        for wa in combinations(wb, r):
                            gain_a = h(tuple(sorted(wa + (item,)))) - h(wa)
                            sub = max(sub, gain_b - gain_a)
    return mono, sub


def mixture_posterior_residual(model: UserTypeModel, c, w) -> float:
    """Largest ``|sum_l p(l|c,w) c'_l(m) - c(m) sum_l p(l|m,w)|`` over types."""
    from .belief import mixture_choice_prob, posterior

    c = np.asarray(c, dtype=np.float64)
    lhs = np.zeros(model.num_types)
    for item in w:
        p = mixture_choice_prob(model, c, w, item)
        if p > 0:
            lhs += p * posterior(model, c, w, item)
    rhs = c * np.array([model.continuation_prob(m, w) for m in range(model.num_types)])
    return float(np.abs(lhs - rhs).max())


def conforming_model(rng: np.random.Generator, num_types: int, num_items: int, k: int, margin: float = 1.5) -> UserTypeModel:
    """Random ratio model with ``B >= 2``.

    Scores are U[0, 1]; each termination score is ``k * max score * u`` with
    ``u ~ U[1, margin]``.  Since a size-k set has total score at most
    ``k * max score``, continuation never exceeds 1/2.
    """
    scores = rng.uniform(0.0, 1.0, (num_types, num_items))
    term = k * scores.max(axis=1) * rng.uniform(1.0, margin, num_types)
    return UserTypeModel(scores, term)


def greedy_q_probe(model: UserTypeModel, k: int, gamma: float, t: int, resolution: int):
    """Probe the greedy-VI Q functions ``Q_{V^0}, ..., Q_{V^{t-1}}`` on a grid.

    Returns a list of :class:`~oneshot.finite_mdp.ProbeReport`, one per sweep.
    """
    net = build_net(model.num_types, resolution)
    problem = BeliefMdp(model, net, k)
    sol = value_iteration(problem, "greedy", gamma, iterations=t, record=True)
    return [q_probe(problem, V, gamma) for V in sol.value_history[:t]]


def value_bound_violation(model: UserTypeModel, k: int, gamma: float, t: int, resolution: int) -> dict:
    """Largest excess of ``V^i`` over ``1 / (B - gamma)`` for every operator and ``i <= t``."""
    B = assumption_b(model, k)
    if not B > gamma:
        raise InvalidArgumentError("bound requires B > gamma")
    cap = 0.0 if B == inf else 1.0 / (B - gamma)
    net = build_net(model.num_types, resolution)
    problem = BeliefMdp(model, net, k)
    out = {}
    for op in ("exact", "greedy", "simple_greedy"):
        sol = value_iteration(problem, op, gamma, iterations=t, record=True)
        out[op] = max(float(V.max(initial=0.0)) - cap for V in sol.value_history)
    return out


__all__ = [
    "BETA_LIMIT",
    "beta",
    "classical_beta",
    "rho",
    "rho_many",
    "theta_bar",
    "theta_bar_many",
    "omega",
    "lambda_bound",
    "heuristic_lambda",
    "check_theorem1",
    "check_theorem2",
    "check_nemhauser",
    "set_function_slacks",
    "coverage_function",
    "check_reward_structure",
    "mixture_posterior_residual",
    "conforming_model",
    "greedy_q_probe",
    "value_bound_violation",
    "TheoremReport",
    "Theorem2Report",
    "NemhauserReport",
]
