"""Seed-set selection: exhaustive greedy, CELF lazy greedy, baselines.

Within one selection step every candidate is scored with the same
Monte-Carlo round keys (common random numbers), so candidate comparisons
are paired rather than independent.  Ties always break toward the lower
node id.  Both greedy and CELF accept an externally supplied spread
evaluator, which the bound-verification code uses to run them against the
exact oracle instead of Monte Carlo.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .diffusion import DiffusionConfig, final_masks, round_keys
from .hypergraph import Hypergraph
from .rng import derive_key
from .spread import BudgetExceeded, DEFAULT_BUDGET, ExactModel, as_weights

_SALT_SELECT = 0x5E


class Objective(str, enum.Enum):
    """Seed-quality weighting: estimated effects, or plain node counting."""

    CAUSAL_ITE = "causal-ite"
    UNIT_COUNT = "unit-count"


@dataclass(frozen=True)
class SelectionTrace:
    """Chosen seeds with per-step marginal gains and evaluation counts."""

    seeds: tuple[int, ...]
    gains: tuple[float, ...]
    evals: tuple[int, ...]
    sigma_curve: tuple[float, ...]


def _objective_weights(g: Hypergraph, weights, objective: Objective) -> np.ndarray:
    if Objective(objective) is Objective.UNIT_COUNT:
        return np.ones(g.node_count)
    return as_weights(g, weights)


class _McEvaluator:
    """Batched spread scoring with per-step common random numbers."""

    def __init__(self, g: Hypergraph, w: np.ndarray, cfg: DiffusionConfig,
                 rounds: int, max_cells: int = 1 << 26):
        self.g = g
        self.w = w
        self.cfg = cfg
        self.rounds = rounds
        self.max_cells = max_cells
        self.keys = None

    def start_step(self, step: int) -> None:
        step_seed = int(derive_key(self.cfg.seed, _SALT_SELECT, step))
        self.keys = round_keys(step_seed, self.rounds)

    def one(self, seeds) -> float:
        if not seeds:
            return 0.0
        return float(self.many(seeds, [None])[0])

    def many(self, base, candidates) -> np.ndarray:
        """Mean spread of base+{c} for each candidate; None means base alone."""
        n = self.g.node_count
        rounds = self.rounds
        base = sorted(base)
        per = max(1, self.max_cells // max(1, n * rounds))
        out = np.empty(len(candidates))
        for lo in range(0, len(candidates), per):
            chunk = candidates[lo:lo + per]
            mask = np.zeros((len(chunk) * rounds, n), dtype=bool)
            if base:
                mask[:, base] = True
            for i, v in enumerate(chunk):
                if v is not None:
                    mask[i * rounds:(i + 1) * rounds, v] = True
            keys = np.tile(self.keys, len(chunk))
            active = final_masks(self.g, mask, self.cfg, keys)
            sums = active @ self.w
            out[lo:lo + len(chunk)] = sums.reshape(len(chunk), rounds).mean(axis=1)
        return out


class _FnEvaluator:
    """Adapter for externally supplied exact/synthetic spread functions."""

    def __init__(self, spread_fn):
        self.fn = spread_fn

    def start_step(self, step: int) -> None:
        pass

    def one(self, seeds) -> float:
        return 0.0 if not seeds else float(self.fn(tuple(sorted(seeds))))

    def many(self, base, candidates) -> np.ndarray:
        out = np.empty(len(candidates))
        for i, v in enumerate(candidates):
            s = set(base)
            if v is not None:
                s.add(v)
            out[i] = self.one(s)
        return out


def _make_evaluator(g, w, cfg, rounds, spread_fn):
    return _FnEvaluator(spread_fn) if spread_fn is not None else _McEvaluator(g, w, cfg, rounds)


def greedy_select(
    g: Hypergraph,
    weights,
    cfg: DiffusionConfig,
    k: int,
    rounds: int = 25,
    objective: Objective = Objective.CAUSAL_ITE,
    spread_fn=None,
    stop_on_negative: bool = False,
) -> SelectionTrace:
    """Exhaustive marginal-gain argmax at every step.

    Follows the unconditional-argmax rule: a negative best gain is still
    taken unless stop_on_negative is set.
    """
    w = _objective_weights(g, weights, objective)
    if not 1 <= k <= g.node_count:
        raise ValueError(f"seed budget {k} outside [1, {g.node_count}]")
    ev = _make_evaluator(g, w, cfg, rounds, spread_fn)
    seeds: list[int] = []
    gains, evals, sigma_curve = [], [], []
    sigma = 0.0
    for step in range(k):
        ev.start_step(step)
        pool = [v for v in range(g.node_count) if v not in seeds]
        base = ev.one(seeds) if seeds else 0.0
        scores = ev.many(seeds, pool)
        best = int(np.argmax(scores))  # first max = lowest node id
        gain = float(scores[best] - base)
        if stop_on_negative and gain < 0:
            break
        seeds.append(pool[best])
        sigma = float(scores[best])
        gains.append(gain)
        evals.append(len(pool) + (1 if seeds[:-1] else 0))
        sigma_curve.append(sigma)
    return SelectionTrace(tuple(seeds), tuple(gains), tuple(evals), tuple(sigma_curve))


def celf_select(
    g: Hypergraph,
    weights,
    cfg: DiffusionConfig,
    k: int,
    rounds: int = 25,
    objective: Objective = Objective.CAUSAL_ITE,
    spread_fn=None,
    stop_on_negative: bool = False,
) -> SelectionTrace:
    """Lazy-forward greedy: re-evaluate only the queue top until it survives.

    Exact under submodularity (non-negative weights); with mixed-sign
    weights it is a heuristic and may diverge from exhaustive greedy.
    """
    import heapq

    w = _objective_weights(g, weights, objective)
    if not 1 <= k <= g.node_count:
        raise ValueError(f"seed budget {k} outside [1, {g.node_count}]")
    ev = _make_evaluator(g, w, cfg, rounds, spread_fn)
    ev.start_step(0)
    pool = list(range(g.node_count))
    scores = ev.many([], pool)
    heap = [(-float(s), v) for v, s in zip(pool, scores)]
    heapq.heapify(heap)
    neg_gain, first = heapq.heappop(heap)
    if stop_on_negative and -neg_gain < 0:
        return SelectionTrace((), (), (), ())
    seeds = [first]
    sigma = -neg_gain
    gains, evals, sigma_curve = [-neg_gain], [len(pool)], [sigma]
    for step in range(1, k):
        ev.start_step(step)
        base = ev.one(seeds)
        step_evals = 1
        stale = {v: True for _, v in heap}
        while True:
            neg_gain, v = heapq.heappop(heap)
            if not stale[v]:
                break
            step_evals += 1
            gain = float(ev.many(seeds, [v])[0] - base)
            stale[v] = False
            heapq.heappush(heap, (-gain, v))
        if stop_on_negative and -neg_gain < 0:
            break
        seeds.append(v)
        sigma = base + -neg_gain
        gains.append(-neg_gain)
        evals.append(step_evals)
        sigma_curve.append(sigma)
    return SelectionTrace(tuple(seeds), tuple(gains), tuple(evals), tuple(sigma_curve))


def random_select(g: Hypergraph, k: int, seed: int) -> SelectionTrace:
    """Uniform sample of k distinct nodes that sit in at least one hyperedge."""
    eligible = [v for v in range(g.node_count) if g.stars[v]]
    if k > len(eligible):
        raise ValueError(f"seed budget {k} exceeds eligible pool of {len(eligible)}")
    rng = np.random.default_rng(seed)
    chosen = rng.choice(len(eligible), size=k, replace=False)
    seeds = tuple(int(eligible[i]) for i in chosen)
    nan = float("nan")
    return SelectionTrace(seeds, (nan,) * k, (0,) * k, (nan,) * k)


def brute_force_optimal(
    g: Hypergraph,
    weights,
    cfg: DiffusionConfig,
    k: int,
    budget: int = DEFAULT_BUDGET,
    model: ExactModel | None = None,
) -> tuple[tuple[int, ...], float]:
    """Exhaustive argmax of the exact spread over all k-subsets.

    Deterministic tie-break: the lexicographically smallest subset wins.
    Pass a pre-built ExactModel to share its transition cache.
    """
    import itertools

    w = as_weights(g, weights)
    n = g.node_count
    if not 1 <= k <= n:
        raise ValueError(f"seed budget {k} outside [1, {n}]")
    if math.comb(n, k) > budget:
        raise BudgetExceeded(f"C({n},{k}) subsets exceed budget {budget}")
    if model is None:
        model = ExactModel(g, cfg, budget)
    best_set: tuple[int, ...] | None = None
    best_sigma = -math.inf
    for combo in itertools.combinations(range(n), k):
        sigma = model.spread(w, combo)
        if sigma > best_sigma + 1e-15:
            best_set, best_sigma = combo, sigma
    return best_set, best_sigma
