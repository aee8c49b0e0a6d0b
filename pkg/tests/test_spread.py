import numpy as np
import pytest
from conftest import random_hypergraph, slow_reach, slow_spread

from causalim.diffusion import DiffusionConfig
from causalim.hypergraph import Hypergraph
from causalim.spread import (BudgetExceeded, ExactModel, closed_form_spread,
                             compute_epsilons, exact_spread, mc_estimate,
                             reachability_table)


def cfg(model="gic", p=0.5, horizon=2, seed=0):
    return DiffusionConfig(model=model, p=p, horizon=horizon, seed=seed)


class TestMcEstimate:
    def test_empty_seeds(self, fig_graph):
        est = mc_estimate(fig_graph, np.ones(7), [], cfg(), 100)
        assert est.mean == 0.0 and est.stderr == 0.0

    def test_p_zero_is_exact(self):
        g = Hypergraph([[0, 1]])
        est = mc_estimate(g, np.array([2.5, 1.0]), [0], cfg(p=0.0), 50)
        assert est.mean == 2.5 and est.stderr == 0.0

    def test_two_node_mixed_weights(self):
        g = Hypergraph([[0, 1]])
        w = np.array([1.0, -2.0])
        c = cfg(p=0.3, horizon=1, seed=5)
        assert exact_spread(g, w, [0], c) == pytest.approx(0.4)
        est = mc_estimate(g, w, [0], c, 100_000)
        assert abs(est.mean - 0.4) < 3 * est.stderr

    def test_rounds_validated(self, fig_graph):
        with pytest.raises(ValueError):
            mc_estimate(fig_graph, np.ones(7), [0], cfg(), 0)


class TestExactSpread:
    def test_single_isolated_seed(self):
        g = Hypergraph([[0, 1]], node_count=3)
        w = np.array([1.0, 2.0, -4.5])
        assert exact_spread(g, w, [2], cfg(p=0.9)) == pytest.approx(-4.5)

    def test_p_one_full_component(self, fig_graph):
        w = np.arange(7, dtype=float)
        assert exact_spread(fig_graph, w, [0], cfg(p=1.0, horizon=8)) \
            == pytest.approx(w.sum())

    def test_figure_sicp_single_step(self, fig_graph):
        w = np.ones(7)
        c = cfg(model="sicp", p=0.5, horizon=1, seed=2)
        value = exact_spread(fig_graph, w, [5], c)
        assert value == pytest.approx(1 + 2 / 3)
        est = mc_estimate(fig_graph, w, [5], c, 100_000)
        assert abs(est.mean - value) < 3 * est.stderr

    @pytest.mark.parametrize("model", ["gic", "sicp"])
    def test_matches_slow_oracle(self, model):
        rng = np.random.default_rng(3)
        for trial in range(10):
            g = random_hypergraph(rng, max_nodes=6, max_edges=4)
            w = rng.uniform(-2, 2, g.node_count)
            seeds = [int(rng.integers(g.node_count))]
            c = cfg(model=model, p=float(rng.choice([0.2, 0.5, 0.8])),
                    horizon=2)
            assert exact_spread(g, w, seeds, c) == pytest.approx(
                slow_spread(g, w, seeds, model, c.p, c.horizon), abs=1e-9)

    def test_budget_guard(self):
        g = random_hypergraph(np.random.default_rng(0), max_nodes=8, max_edges=5)
        with pytest.raises(BudgetExceeded):
            exact_spread(g, np.ones(g.node_count), [0], cfg(p=0.5, horizon=3),
                         budget=4)


class TestReachability:
    def test_chain_two_steps(self, chain_graph):
        rt = reachability_table(chain_graph, cfg(p=0.5, horizon=2), [[0]])
        row = rt.row([0])
        assert row[1] == pytest.approx(0.5)
        assert row[2] == pytest.approx(0.25)

    def test_p_zero(self, fig_graph):
        rt = reachability_table(fig_graph, cfg(p=0.0), [[5]])
        row = rt.row([5])
        assert row[5] == 1.0
        assert np.all(row[[0, 1, 2, 3, 4, 6]] == 0.0)

    def test_missing_row_raises(self, fig_graph):
        rt = reachability_table(fig_graph, cfg(), [[0]])
        with pytest.raises(KeyError):
            rt.row([1])

    @pytest.mark.parametrize("model", ["gic", "sicp"])
    def test_matches_slow_oracle(self, model):
        rng = np.random.default_rng(8)
        for trial in range(8):
            g = random_hypergraph(rng, max_nodes=6, max_edges=4)
            seeds = [int(rng.integers(g.node_count))]
            c = cfg(model=model, p=0.5, horizon=2)
            rt = reachability_table(g, c, [seeds])
            slow = slow_reach(g, seeds, model, c.p, c.horizon)
            assert np.allclose(rt.row(seeds), slow, atol=1e-9)

    @pytest.mark.parametrize("model", ["gic", "sicp"])
    def test_source_monotonicity(self, model):
        # adding a seed never lowers any reach probability
        rng = np.random.default_rng(15)
        for trial in range(50):
            g = random_hypergraph(rng, max_nodes=7, max_edges=5)
            s = int(rng.integers(g.node_count))
            extra = int(rng.integers(g.node_count))
            if extra == s:
                continue
            c = cfg(model=model, p=float(rng.choice([0.2, 0.5, 0.8])), horizon=2)
            rt = reachability_table(g, c, [[s], [s, extra]])
            small, big = rt.row([s]), rt.row([s, extra])
            assert np.all(big >= small - 1e-12)


class TestClosedForm:
    @pytest.mark.parametrize("model", ["gic", "sicp"])
    def test_equals_exact_on_random_instances(self, model):
        rng = np.random.default_rng(23)
        for trial in range(25):
            g = random_hypergraph(rng)
            w = rng.uniform(-2, 2, g.node_count)
            seeds = sorted(int(v) for v in rng.choice(
                g.node_count, size=rng.integers(1, 3), replace=False))
            c = cfg(model=model, p=float(rng.choice([0.2, 0.5, 0.8])), horizon=2)
            rt = reachability_table(g, c, [seeds])
            assert closed_form_spread(g, w, rt, seeds) == pytest.approx(
                exact_spread(g, w, seeds, c), abs=1e-9)

    def test_all_nodes_seeded(self, fig_graph):
        w = np.arange(7, dtype=float)
        seeds = list(range(7))
        rt = reachability_table(fig_graph, cfg(p=0.3), [seeds])
        assert closed_form_spread(fig_graph, w, rt, seeds) == pytest.approx(w.sum())

    def test_p_zero_sums_seed_weights(self, fig_graph):
        w = np.linspace(-1, 2, 7)
        rt = reachability_table(fig_graph, cfg(p=0.0), [[1, 4]])
        assert closed_form_spread(fig_graph, w, rt, [1, 4]) \
            == pytest.approx(w[1] + w[4])


class TestEpsilons:
    def test_p_zero_gives_zero(self, fig_graph):
        e1, e2 = compute_epsilons(fig_graph, np.ones(7), cfg(p=0.0))
        assert e1 == 0.0 and e2 == 0.0

    def test_zero_weights_zero_eps2(self, fig_graph):
        e1, e2 = compute_epsilons(fig_graph, np.zeros(7), cfg(p=0.7))
        assert e2 == 0.0 and e1 > 0.0

    @pytest.mark.parametrize("model", ["gic", "sicp"])
    def test_dual_path_agreement(self, model):
        # recompute both constants against the slow recursive oracle
        rng = np.random.default_rng(4)
        for trial in range(4):
            g = random_hypergraph(rng, max_nodes=5, max_edges=3)
            n = g.node_count
            w = rng.uniform(-2, 2, n)
            c = cfg(model=model, p=0.5, horizon=2)
            cap = 2
            e1, e2 = compute_epsilons(g, w, c, cap=cap)
            slow_rows = {}
            import itertools
            for size in range(1, cap + 2):
                for combo in itertools.combinations(range(n), size):
                    slow_rows[combo] = slow_reach(g, combo, model, c.p, c.horizon)
            slow_e2 = max(
                sum(abs(w[u]) * slow_rows[(v,)][u] for u in range(n) if u != v)
                for v in range(n))
            slow_e1 = 0.0
            for size in range(1, cap + 1):
                for combo in itertools.combinations(range(n), size):
                    for extra in range(n):
                        if extra in combo:
                            continue
                        grown = tuple(sorted(combo + (extra,)))
                        for t in range(n):
                            if t in combo or t == extra:
                                continue
                            slow_e1 = max(slow_e1, abs(
                                slow_rows[grown][t] - slow_rows[combo][t]))
            assert e2 == pytest.approx(slow_e2, abs=1e-9)
            assert e1 == pytest.approx(slow_e1, abs=1e-9)


class TestMcUnbiasedness:
    @pytest.mark.parametrize("model", ["gic", "sicp"])
    def test_pooled_mean_matches_exact(self, model):
        g = Hypergraph([[0, 1, 2], [2, 3], [1, 3, 4]])
        w = np.array([1.0, -0.5, 2.0, 0.7, -1.2])
        c = cfg(model=model, p=0.4, horizon=3, seed=0)
        exact = exact_spread(g, w, [0], c)
        means, ses = [], []
        for s in range(20):
            est = mc_estimate(g, w, [0],
                              DiffusionConfig(model=model, p=0.4, horizon=3,
                                              seed=1000 + s), 2000)
            means.append(est.mean)
            ses.append(est.stderr)
        pooled = np.mean(means)
        pooled_se = np.sqrt(np.mean(np.square(ses)) / len(means))
        assert abs(pooled - exact) <= 3 * pooled_se
