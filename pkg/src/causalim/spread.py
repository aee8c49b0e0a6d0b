"""Spread-value computation: Monte-Carlo estimates and exact oracles.

The Monte-Carlo estimator runs batched cascades and averages the weighted
sum of activated nodes (seeds included).  The exact side works on small
instances only: it propagates the full probability distribution over
active-set bitmasks through the one-step transition law of the configured
model, with transitions memoized per state and a work-unit budget that
aborts anything beyond desk scale.

``exact_spread`` aggregates over the final set distribution, while
``closed_form_spread`` assembles the same value from per-node reach
probabilities; agreement of the two routes is part of the test oracle web.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .diffusion import DiffusionConfig, DiffusionModel, final_masks, round_keys
from .hypergraph import Hypergraph

DEFAULT_BUDGET = 1 << 25


class BudgetExceeded(RuntimeError):
    """Exact enumeration would exceed the configured work budget."""


@dataclass(frozen=True)
class SpreadEstimate:
    mean: float
    stderr: float
    rounds: int


def as_weights(g: Hypergraph, weights) -> np.ndarray:
    """Accept a per-node array or anything with a tau_hat attribute."""
    tau = getattr(weights, "tau_hat", weights)
    if tau is None:
        raise ValueError("table carries no estimated effects; run estimation first")
    tau = np.asarray(tau, dtype=np.float64)
    if tau.shape != (g.node_count,):
        raise ValueError(f"weights shape {tau.shape} != ({g.node_count},)")
    return tau


def mc_estimate(
    g: Hypergraph, weights, seeds, cfg: DiffusionConfig, rounds: int,
    max_chunk_cells: int = 1 << 26,
) -> SpreadEstimate:
    """Average weighted activation mass over `rounds` independent cascades."""
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    w = as_weights(g, weights)
    seeds = sorted(set(int(s) for s in seeds))
    if not seeds:
        return SpreadEstimate(0.0, 0.0, rounds)
    keys = round_keys(cfg.seed, rounds)
    chunk = max(1, max_chunk_cells // max(1, g.node_count))
    sums = np.empty(rounds)
    for lo in range(0, rounds, chunk):
        hi = min(rounds, lo + chunk)
        mask = np.zeros((hi - lo, g.node_count), dtype=bool)
        mask[:, seeds] = True
        active = final_masks(g, mask, cfg, keys[lo:hi])
        sums[lo:hi] = active @ w
    mean = float(sums.mean())
    stderr = float(sums.std(ddof=1) / np.sqrt(rounds)) if rounds > 1 else 0.0
    return SpreadEstimate(mean, stderr, rounds)


# -- exact enumeration ------------------------------------------------------


class _Work:
    __slots__ = ("used", "budget")

    def __init__(self, budget: int):
        self.used = 0
        self.budget = budget

    def charge(self, units: int):
        self.used += units
        if self.used > self.budget:
            raise BudgetExceeded(
                f"exact enumeration exceeded {self.budget} work units")


class ExactModel:
    """Memoized one-step transition law over active-set bitmasks.

    GIC states are (active, frontier) pairs because only the newest layer
    attacks; SICP states are plain active sets.  Transition distributions
    are cached per state, so repeated spread queries on one instance (as in
    greedy selection or bound checks) stay cheap.
    """

    def __init__(self, g: Hypergraph, cfg: DiffusionConfig, budget: int = DEFAULT_BUDGET):
        if cfg.pair_probs:
            raise NotImplementedError("exact oracles assume a uniform p")
        self.g = g
        self.cfg = cfg
        self.budget = budget
        self._gic_cache: dict[tuple[int, int], list[tuple[int, float]]] = {}
        self._sicp_cache: dict[int, list[tuple[int, float]]] = {}
        self._nbr_masks = [self._mask(sorted(g.neighbors(v))) for v in range(g.node_count)]
        self._member_masks = [self._mask(m) for m in g.members]

    @staticmethod
    def _mask(nodes) -> int:
        m = 0
        for v in nodes:
            m |= 1 << int(v)
        return m

    @staticmethod
    def _bits(mask: int) -> list[int]:
        out = []
        v = 0
        while mask:
            if mask & 1:
                out.append(v)
            mask >>= 1
            v += 1
        return out

    # -- transition laws -------------------------------------------------

    def _gic_step(self, active: int, frontier: int, work: _Work) -> list[tuple[int, float]]:
        key = (active, frontier)
        if key in self._gic_cache:
            work.charge(1)
            return self._gic_cache[key]
        p = self.cfg.p
        cand = []
        for v in range(self.g.node_count):
            if active >> v & 1:
                continue
            k = bin(self._nbr_masks[v] & frontier).count("1")
            if k:
                cand.append((v, 1.0 - (1.0 - p) ** k))
        work.charge(1 << len(cand))
        out: list[tuple[int, float]] = []
        branches = [((0, 1.0 - q), (1, q)) for _, q in cand]
        for picks in itertools.product(*branches):
            prob = 1.0
            newly = 0
            for (v, _), (hit, branch_prob) in zip(cand, picks):
                prob *= branch_prob
                if hit:
                    newly |= 1 << v
            if prob > 0.0:
                out.append((newly, prob))
        self._gic_cache[key] = out
        return out

    def _infection_sets(self, u: int, active: int, work: _Work) -> list[tuple[int, float]]:
        """Distribution of the set a single SICP attacker infects this step."""
        p = self.cfg.p
        stars = self.g.stars[u]
        acc: dict[int, float] = {}
        share = 1.0 / len(stars)
        for e in stars:
            targets = self._bits(self._member_masks[e] & ~active)
            work.charge(1 << len(targets))
            for sub in range(1 << len(targets)):
                prob = share
                mask = 0
                for i, v in enumerate(targets):
                    if sub >> i & 1:
                        prob *= p
                        mask |= 1 << v
                    else:
                        prob *= 1.0 - p
                if prob > 0.0:
                    acc[mask] = acc.get(mask, 0.0) + prob
        return list(acc.items())

    def _sicp_step(self, active: int, work: _Work) -> list[tuple[int, float]]:
        if active in self._sicp_cache:
            work.charge(1)
            return self._sicp_cache[active]
        dist: dict[int, float] = {0: 1.0}
        for u in self._bits(active):
            if not self.g.stars[u]:
                continue
            contrib = self._infection_sets(u, active, work)
            if len(contrib) == 1 and contrib[0][0] == 0:
                continue
            new: dict[int, float] = {}
            work.charge(len(dist) * len(contrib))
            for got, pg in dist.items():
                for extra, pe in contrib:
                    key = got | extra
                    new[key] = new.get(key, 0.0) + pg * pe
            dist = new
        out = list(dist.items())
        self._sicp_cache[active] = out
        return out

    def _sicp_can_grow(self, active: int) -> bool:
        for u in self._bits(active):
            for e in self.g.stars[u]:
                if self._member_masks[e] & ~active:
                    return True
        return False

    # -- forward propagation ---------------------------------------------

    def final_distribution(self, seeds) -> dict[int, float]:
        """Probability over active-set bitmasks after the full horizon."""
        work = _Work(self.budget)
        seed_mask = self._mask(set(int(s) for s in seeds))
        if DiffusionModel(self.cfg.model) is DiffusionModel.GIC:
            dist: dict[tuple[int, int], float] = {(seed_mask, seed_mask): 1.0}
            for _ in range(self.cfg.horizon):
                if all(f == 0 for _, f in dist):
                    break
                nxt: dict[tuple[int, int], float] = {}
                for (a, f), prob in dist.items():
                    if f == 0:
                        nxt[(a, 0)] = nxt.get((a, 0), 0.0) + prob
                        continue
                    for newly, tp in self._gic_step(a, f, work):
                        key = (a | newly, newly)
                        nxt[key] = nxt.get(key, 0.0) + prob * tp
                dist = nxt
            final: dict[int, float] = {}
            for (a, _), prob in dist.items():
                final[a] = final.get(a, 0.0) + prob
            return final
        dist2: dict[int, float] = {seed_mask: 1.0}
        for _ in range(self.cfg.horizon):
            if not any(self._sicp_can_grow(a) for a in dist2):
                break
            nxt2: dict[int, float] = {}
            for a, prob in dist2.items():
                if not self._sicp_can_grow(a):
                    nxt2[a] = nxt2.get(a, 0.0) + prob
                    continue
                for newly, tp in self._sicp_step(a, work):
                    key = a | newly
                    nxt2[key] = nxt2.get(key, 0.0) + prob * tp
            dist2 = nxt2
        return dist2

    def reach_probabilities(self, seeds) -> np.ndarray:
        """P(node active at the horizon) for every node; 1.0 on the seeds."""
        dist = self.final_distribution(seeds)
        out = np.zeros(self.g.node_count)
        for mask, prob in dist.items():
            for v in self._bits(mask):
                out[v] += prob
        return out

    def spread(self, weights, seeds) -> float:
        """Expected weighted activation mass, aggregated over final sets."""
        w = as_weights(self.g, weights)
        dist = self.final_distribution(seeds)
        total = 0.0
        for mask, prob in dist.items():
            phi = 0.0
            for v in self._bits(mask):
                phi += w[v]
            total += prob * phi
        return total


@dataclass(frozen=True)
class ReachabilityTable:
    """Per-source-set activation probabilities within the horizon."""

    horizon: int
    entries: dict[frozenset, np.ndarray]

    def row(self, seeds) -> np.ndarray:
        key = frozenset(int(s) for s in seeds)
        if key not in self.entries:
            raise KeyError(f"no reachability row for source set {sorted(key)}")
        return self.entries[key]


def exact_spread(g: Hypergraph, weights, seeds, cfg: DiffusionConfig,
                 budget: int = DEFAULT_BUDGET) -> float:
    return ExactModel(g, cfg, budget).spread(weights, seeds)


def reachability_table(g: Hypergraph, cfg: DiffusionConfig, sources,
                       budget: int = DEFAULT_BUDGET) -> ReachabilityTable:
    model = ExactModel(g, cfg, budget)
    entries = {}
    for src in sources:
        key = frozenset(int(s) for s in src)
        entries[key] = model.reach_probabilities(key)
    return ReachabilityTable(cfg.horizon, entries)


def closed_form_spread(g: Hypergraph, weights, rt: ReachabilityTable, seeds) -> float:
    """Sum of seed weights plus reach-probability-weighted mass elsewhere."""
    w = as_weights(g, weights)
    seed_set = set(int(s) for s in seeds)
    row = rt.row(seed_set)
    total = sum(w[u] for u in seed_set)
    for v in range(g.node_count):
        if v not in seed_set:
            total += w[v] * row[v]
    return float(total)


def compute_epsilons(
    g: Hypergraph, weights, cfg: DiffusionConfig,
    cap: int = 3, budget: int = DEFAULT_BUDGET,
    model: "ExactModel | None" = None,
) -> tuple[float, float]:
    """Attained bound constants of the generalized greedy guarantee.

    epsilon1: largest change of any off-source reach probability when one
    node is added to a source set (source sizes 1..cap exhaustively).
    epsilon2: largest single-source weighted reachable mass, the source's
    own weight excluded.  Both are exact on the enumerated sizes; epsilon1
    is a lower bound of the all-sizes constant when cap < node_count - 1.
    """
    w = as_weights(g, weights)
    if model is None:
        model = ExactModel(g, cfg, budget)
    n = g.node_count
    rows: dict[frozenset, np.ndarray] = {}
    cap = max(1, min(cap, n - 1))
    for size in range(1, cap + 2):
        for combo in itertools.combinations(range(n), size):
            rows[frozenset(combo)] = model.reach_probabilities(combo)
    eps2 = 0.0
    for v in range(n):
        row = rows[frozenset((v,))]
        mass = sum(abs(w[u]) * row[u] for u in range(n) if u != v)
        eps2 = max(eps2, float(mass))
    eps1 = 0.0
    for size in range(1, cap + 1):
        for combo in itertools.combinations(range(n), size):
            base = rows[frozenset(combo)]
            for extra in range(n):
                if extra in combo:
                    continue
                grown = rows[frozenset(combo) | {extra}]
                for target in range(n):
                    if target in combo or target == extra:
                        continue
                    eps1 = max(eps1, float(abs(grown[target] - base[target])))
    return eps1, eps2
