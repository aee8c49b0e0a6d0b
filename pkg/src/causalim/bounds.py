"""Numerical certification of the greedy guarantees on enumerable instances.

All checks run the selection loop against the exact spread oracle, never
Monte Carlo, so a failed inequality indicts the bound itself rather than
sampling noise.  Inequalities are tested with a 1e-9 tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .diffusion import DiffusionConfig
from .hypergraph import Hypergraph
from .selection import brute_force_optimal, greedy_select
from .spread import (BudgetExceeded, DEFAULT_BUDGET, ExactModel, as_weights,
                     compute_epsilons)

TOL = 1e-9


@dataclass(frozen=True)
class BoundReport:
    """Outcome of the generalized approximation-bound check."""

    sigma_greedy: float
    sigma_opt: float
    epsilon1: float
    epsilon2: float
    k: int
    rhs: float
    holds: bool
    slack: float
    greedy_seeds: tuple[int, ...]
    opt_seeds: tuple[int, ...]
    # the clean (1 - 1/e) specialization, evaluated when all weights > 0
    positive_weights: bool = False
    positive_rhs: float | None = None
    positive_holds: bool | None = None


@dataclass(frozen=True)
class RobustnessReport:
    """Outcome of the perturbed-objective (robustness) bound check."""

    gamma: float
    epsilon: float
    condition_ok: bool
    perturbed_sigma: float
    rhs: float
    holds: bool
    slack: float
    sigma_opt: float
    epsilon1: float
    epsilon2: float
    k: int
    greedy_seeds: tuple[int, ...]
    delta: float | None = None
    excluded_sets: int = 0


def generalized_rhs(sigma_opt: float, k: int, eps1: float, eps2: float,
                    epsilon: float = 0.0) -> float:
    """(1 - 1/e - epsilon) * (opt - K*e1*e2) - e2 * e^(1/K - 1)."""
    return ((1.0 - 1.0 / math.e - epsilon) * (sigma_opt - k * eps1 * eps2)
            - eps2 * math.exp(1.0 / k - 1.0))


def gamma_condition_boundary(epsilon: float, k: int) -> float:
    """Largest relative error the robustness premise admits for given epsilon."""
    return (epsilon / k) / (2.0 + epsilon / k)


def _epsilons_with_model(g, w, cfg, cap, model: ExactModel) -> tuple[float, float]:
    return compute_epsilons(g, w, cfg, cap=cap, model=model)


def verify_theorem1(
    g: Hypergraph,
    weights,
    cfg: DiffusionConfig,
    k: int,
    cap: int = 3,
    budget: int = DEFAULT_BUDGET,
) -> BoundReport:
    """Greedy-vs-optimal check of the generalized approximation bound."""
    w = as_weights(g, weights)
    model = ExactModel(g, cfg, budget)
    spread_fn = lambda s: model.spread(w, s)
    trace = greedy_select(g, w, cfg, k, spread_fn=spread_fn)
    sigma_greedy = spread_fn(trace.seeds)
    opt_seeds, sigma_opt = brute_force_optimal(g, w, cfg, k, budget=budget, model=model)
    eps1, eps2 = _epsilons_with_model(g, w, cfg, cap, model)
    rhs = generalized_rhs(sigma_opt, k, eps1, eps2)
    slack = sigma_greedy - rhs
    positive = bool((w > 0).all())
    positive_rhs = (1.0 - 1.0 / math.e) * sigma_opt if positive else None
    positive_holds = (sigma_greedy >= positive_rhs - TOL) if positive else None
    return BoundReport(
        sigma_greedy=sigma_greedy, sigma_opt=sigma_opt,
        epsilon1=eps1, epsilon2=eps2, k=k, rhs=rhs,
        holds=bool(slack >= -TOL), slack=slack,
        greedy_seeds=trace.seeds, opt_seeds=tuple(opt_seeds),
        positive_weights=positive, positive_rhs=positive_rhs,
        positive_holds=positive_holds,
    )


def _misleading_sign(seed_set) -> float:
    # deterministic +1/-1 depending on the set's content, so candidate sets
    # within one greedy step get opposite distortions
    return 1.0 if sum(seed_set) % 2 == 0 else -1.0


def verify_theorem2(
    g: Hypergraph,
    weights,
    cfg: DiffusionConfig,
    k: int,
    gamma: float,
    epsilon: float | None = None,
    cap: int = 3,
    budget: int = DEFAULT_BUDGET,
) -> RobustnessReport:
    """Run greedy on an adversarially perturbed objective, check the
    epsilon-degraded bound against the true spread of the chosen set.

    The adversary multiplies the true spread by (1 +/- gamma), flipping the
    sign with the parity of the seed set so that comparisons inside a
    greedy step are distorted in opposite directions.
    """
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    w = as_weights(g, weights)
    if epsilon is None:
        if gamma >= 1.0:
            raise ValueError("premise needs gamma < 1 to admit any epsilon")
        epsilon = 0.0 if gamma == 0.0 else 2.0 * gamma * k / (1.0 - gamma)
    condition_ok = bool(gamma <= gamma_condition_boundary(epsilon, k) + 1e-12)
    model = ExactModel(g, cfg, budget)

    def perturbed(s):
        true = model.spread(w, s)
        return true * (1.0 + gamma * _misleading_sign(s))

    trace = greedy_select(g, w, cfg, k, spread_fn=perturbed)
    perturbed_sigma = model.spread(w, trace.seeds)
    opt_seeds, sigma_opt = brute_force_optimal(g, w, cfg, k, budget=budget, model=model)
    eps1, eps2 = _epsilons_with_model(g, w, cfg, cap, model)
    rhs = generalized_rhs(sigma_opt, k, eps1, eps2, epsilon=epsilon)
    slack = perturbed_sigma - rhs
    return RobustnessReport(
        gamma=gamma, epsilon=epsilon, condition_ok=condition_ok,
        perturbed_sigma=perturbed_sigma, rhs=rhs,
        holds=bool(slack >= -TOL), slack=slack,
        sigma_opt=sigma_opt, epsilon1=eps1, epsilon2=eps2, k=k,
        greedy_seeds=trace.seeds,
    )


def verify_corollary1(
    g: Hypergraph,
    table,
    cfg: DiffusionConfig,
    k: int,
    delta: float | None = None,
    cap: int = 3,
    budget: int = DEFAULT_BUDGET,
) -> RobustnessReport:
    """Noise-robustness check with real estimation error.

    Derives gamma = delta * max over enumerated seed sets of the ratio of
    the unit-count spread to the true-effect spread, then runs greedy on
    the estimated effects and checks the degraded bound against the true
    effects.  Sets with a true spread below 1e-12 in magnitude are skipped
    and counted.
    """
    import itertools

    if table.tau_true is None or table.tau_hat is None:
        raise ValueError("corollary check needs both true and estimated effects")
    w_true = np.asarray(table.tau_true, dtype=np.float64)
    w_hat = np.asarray(table.tau_hat, dtype=np.float64)
    if delta is None:
        delta = float(np.max(np.abs(w_hat - w_true)))
    n = g.node_count
    if (1 << n) - 1 > budget:
        raise BudgetExceeded(f"2^{n} seed sets exceed budget {budget}")
    model = ExactModel(g, cfg, budget)
    ones = np.ones(n)
    ratio = 0.0
    excluded = 0
    for size in range(1, n + 1):
        for combo in itertools.combinations(range(n), size):
            row = model.reach_probabilities(combo)
            seed_mass_true = sum(w_true[u] for u in combo)
            seed_mass_naive = float(size)
            rest = [v for v in range(n) if v not in combo]
            s_true = seed_mass_true + sum(w_true[v] * row[v] for v in rest)
            s_naive = seed_mass_naive + sum(row[v] for v in rest)
            if abs(s_true) < 1e-12:
                excluded += 1
                continue
            ratio = max(ratio, abs(s_naive / s_true))
    gamma = delta * ratio
    if gamma == 0.0:
        epsilon = 0.0
    elif gamma < 1.0:
        epsilon = 2.0 * gamma * k / (1.0 - gamma)
    else:
        epsilon = math.inf
    condition_ok = bool(gamma <= gamma_condition_boundary(epsilon, k) + 1e-12) \
        if math.isfinite(epsilon) else False

    spread_hat = lambda s: model.spread(w_hat, s)
    trace = greedy_select(g, w_hat, cfg, k, spread_fn=spread_hat)
    perturbed_sigma = model.spread(w_true, trace.seeds)
    opt_seeds, sigma_opt = brute_force_optimal(g, w_true, cfg, k, budget=budget, model=model)
    eps1, eps2 = _epsilons_with_model(g, w_true, cfg, cap, model)
    rhs = generalized_rhs(sigma_opt, k, eps1, eps2, epsilon=epsilon) \
        if math.isfinite(epsilon) else -math.inf
    slack = perturbed_sigma - rhs
    return RobustnessReport(
        gamma=gamma, epsilon=epsilon, condition_ok=condition_ok,
        perturbed_sigma=perturbed_sigma, rhs=rhs,
        holds=bool(slack >= -TOL), slack=slack,
        sigma_opt=sigma_opt, epsilon1=eps1, epsilon2=eps2, k=k,
        greedy_seeds=trace.seeds, delta=delta, excluded_sets=excluded,
    )


def shrink_counterexample(g, weights, cfg, k, violates):
    """Greedily reduce a violating instance while it keeps violating.

    ``violates(g, weights, cfg, k) -> bool`` decides; the shrinker tries
    dropping hyperedges, dropping nodes, lowering k and the horizon, and
    zeroing weights, until no single reduction preserves the violation.
    Deterministic, so a filed counterexample is reproducible.
    """
    w = list(np.asarray(as_weights(g, weights), dtype=float))

    def try_instance(members, node_count, ww, cc, kk):
        try:
            gg = Hypergraph(members, node_count=node_count)
            arr = np.asarray(ww, dtype=float)
            return violates(gg, arr, cc, kk), gg, arr
        except (ValueError, BudgetExceeded):
            return False, None, None

    members = [list(m) for m in g.members]
    n = g.node_count
    changed = True
    while changed:
        changed = False
        for e in range(len(members)):  # drop one hyperedge
            cand = members[:e] + members[e + 1:]
            ok, gg, arr = try_instance(cand, n, w, cfg, k)
            if ok:
                members, changed = cand, True
                break
        if changed:
            continue
        for v in range(n - 1, -1, -1):  # drop one node, remap the rest
            if n - 1 < 1:
                break
            cand = [[x - 1 if x > v else x for x in m if x != v]
                    for m in members]
            cand = [m for m in cand if m]
            ww = w[:v] + w[v + 1:]
            kk = min(k, n - 1)
            ok, gg, arr = try_instance(cand, n - 1, ww, cfg, kk)
            if ok:
                members, n, w, k, changed = cand, n - 1, ww, kk, True
                break
        if changed:
            continue
        if k > 1:
            ok, gg, arr = try_instance(members, n, w, cfg, k - 1)
            if ok:
                k, changed = k - 1, True
                continue
        if cfg.horizon > 1:
            smaller = DiffusionConfig(model=cfg.model, p=cfg.p,
                                      horizon=cfg.horizon - 1, seed=cfg.seed)
            ok, gg, arr = try_instance(members, n, w, smaller, k)
            if ok:
                cfg, changed = smaller, True
                continue
        for v in range(n):  # simplify weights
            if w[v] == 0.0:
                continue
            ww = list(w)
            ww[v] = 0.0
            ok, gg, arr = try_instance(members, n, ww, cfg, k)
            if ok:
                w, changed = ww, True
                break
    return Hypergraph(members, node_count=n), np.asarray(w), cfg, k


@dataclass(frozen=True)
class ClaimCheck:
    name: str
    step: int
    lhs: float
    rhs: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs + TOL


def check_claims(
    g: Hypergraph,
    weights,
    cfg: DiffusionConfig,
    k: int,
    cap: int = 3,
    budget: int = DEFAULT_BUDGET,
) -> list[ClaimCheck]:
    """Evaluate the three stepping-stone inequalities behind the bound.

    These are guaranteed only for non-negative weights (where they reduce
    to plain monotonicity/submodularity algebra plus slack); with mixed
    signs they are reported for inspection rather than asserted.
    """
    w = as_weights(g, weights)
    model = ExactModel(g, cfg, budget)
    fn = lambda s: model.spread(w, s)
    trace = greedy_select(g, w, cfg, k, spread_fn=fn)
    opt_seeds, sigma_opt = brute_force_optimal(g, w, cfg, k, budget=budget, model=model)
    eps1, eps2 = _epsilons_with_model(g, w, cfg, cap, model)
    greedy_prefix = [tuple(trace.seeds[:i]) for i in range(k + 1)]
    opt = tuple(opt_seeds)
    opt_front = opt[:-1]
    checks = []
    for i in range(k + 1):
        union = tuple(sorted(set(opt) | set(greedy_prefix[i])))
        checks.append(ClaimCheck("claim1", i, sigma_opt, fn(union) + i * eps2))
    for i in range(k):
        si = set(greedy_prefix[i])
        lhs = fn(tuple(sorted(set(opt) | si)))
        gain = fn(greedy_prefix[i + 1]) - fn(greedy_prefix[i])
        rhs = gain + fn(tuple(sorted(si | set(opt_front)))) + eps1 * eps2
        checks.append(ClaimCheck("claim2", i, lhs, rhs))
    for i in range(k):
        si = set(greedy_prefix[i])
        lhs = fn(tuple(sorted(si | set(opt_front))))
        gain = fn(greedy_prefix[i + 1]) - fn(greedy_prefix[i])
        rhs = (k - 1) * gain + fn(greedy_prefix[i]) + (k - 1) * eps1 * eps2
        checks.append(ClaimCheck("claim3", i, lhs, rhs))
    return checks
