"""Shared fixtures and independent slow oracles.

The reference implementations here recompute reach probabilities and
spreads by direct recursion over outcome trees, with plain Python sets and
no memoization, deliberately sharing no code with the package's
enumeration machinery.
"""

from __future__ import annotations

from itertools import product

import numpy as np
import pytest

from causalim.hypergraph import Hypergraph


@pytest.fixture
def fig_graph():
    """Seven nodes, four hyperedges; node 5 sits in edges 1, 2 and 3."""
    return Hypergraph(
        [[0, 1, 2], [2, 3, 5], [4, 5], [5, 6]],
        node_labels=["V1", "V2", "V3", "V4", "V5", "V6", "V7"],
        edge_labels=["H1", "H2", "H3", "H4"],
    )


@pytest.fixture
def chain_graph():
    return Hypergraph([[0, 1], [1, 2]])


def slow_reach(g: Hypergraph, seeds, model: str, p: float, horizon: int) -> np.ndarray:
    """Reach probabilities by raw outcome-tree recursion (no memoization)."""
    n = g.node_count
    seeds = frozenset(int(s) for s in seeds)
    acc = np.zeros(n)
    nbrs = [g.neighbors(v) for v in range(n)]

    if model == "gic":
        def rec(active, frontier, steps, prob):
            if steps == 0 or not frontier:
                for v in active:
                    acc[v] += prob
                return
            cand = sorted(v for v in range(n)
                          if v not in active and nbrs[v] & frontier)
            qs = [1.0 - (1.0 - p) ** len(nbrs[v] & frontier) for v in cand]
            for bits in product([0, 1], repeat=len(cand)):
                pr = prob
                newly = set()
                for v, q, b in zip(cand, qs, bits):
                    pr *= q if b else (1.0 - q)
                    if b:
                        newly.add(v)
                if pr > 0.0:
                    rec(active | newly, frozenset(newly), steps - 1, pr)

        rec(seeds, seeds, horizon, 1.0)
        return acc

    def rec_sicp(active, steps, prob):
        if steps == 0:
            for v in active:
                acc[v] += prob
            return
        attackers = sorted(u for u in active if g.stars[u])
        if not attackers:
            for v in active:
                acc[v] += prob
            return
        for choices in product(*[g.stars[u] for u in attackers]):
            pr_choice = prob
            hits: dict[int, int] = {}
            for u, e in zip(attackers, choices):
                pr_choice /= len(g.stars[u])
                for v in g.members[e]:
                    if v not in active:
                        hits[v] = hits.get(v, 0) + 1
            cand = sorted(hits)
            qs = [1.0 - (1.0 - p) ** hits[v] for v in cand]
            for bits in product([0, 1], repeat=len(cand)):
                pr = pr_choice
                newly = set()
                for v, q, b in zip(cand, qs, bits):
                    pr *= q if b else (1.0 - q)
                    if b:
                        newly.add(v)
                if pr > 0.0:
                    rec_sicp(active | newly, steps - 1, pr)

    rec_sicp(seeds, horizon, 1.0)
    return acc


def slow_spread(g, weights, seeds, model, p, horizon) -> float:
    """Expected weighted activation mass from the slow reach oracle."""
    reach = slow_reach(g, seeds, model, p, horizon)
    w = np.asarray(weights, dtype=float)
    seeds = set(int(s) for s in seeds)
    total = sum(w[v] for v in seeds)
    total += sum(w[v] * reach[v] for v in range(g.node_count) if v not in seeds)
    return float(total)


def random_hypergraph(rng: np.random.Generator, max_nodes=8, max_edges=5) -> Hypergraph:
    n = int(rng.integers(3, max_nodes + 1))
    m = int(rng.integers(1, max_edges + 1))
    members = []
    for _ in range(m):
        size = int(rng.integers(2, min(4, n) + 1))
        members.append(sorted(int(v) for v in rng.choice(n, size=size, replace=False)))
    return Hypergraph(members, node_count=n)
