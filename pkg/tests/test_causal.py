import warnings

import numpy as np
import pytest

from causalim.causal import (DegenerateArmError, DegenerateArmWarning,
                             NodeCausalTable, ObservedData, SimulationParams,
                             draw_coefficients, dumps_attrs, dumps_ite,
                             environment_summary, estimate_ite, inject_noise,
                             loads_attrs, loads_ite, simulate_outcomes)
from causalim.experiments import NOISE_GRID, synthesize_hypergraph
from causalim.hypergraph import Hypergraph


def line_graph(n):
    return Hypergraph([[i, i + 1] for i in range(n - 1)], node_count=n)


class TestSimulation:
    def test_null_effect(self):
        g = line_graph(30)
        params = SimulationParams(d=3, effect_scale=0.0, spillover_scale=0.0,
                                  effect_bias=0.0)
        table = simulate_outcomes(g, params, seed=1)
        assert np.allclose(table.tau_true, 0.0)

    def test_isolated_node_effect_is_direct_term(self):
        g = Hypergraph([[0, 1]], node_count=3)  # node 2 isolated
        params = SimulationParams(d=4, spillover_scale=0.0, effect_bias=0.0)
        table = simulate_outcomes(g, params, seed=9)
        rng = np.random.default_rng(9)
        _, _, b1, _ = draw_coefficients(params, rng)
        assert table.tau_true[2] == pytest.approx(float(table.x[2] @ b1), abs=1e-12)

    def test_consistency_of_observed_arm(self):
        g = line_graph(50)
        table = simulate_outcomes(g, SimulationParams(d=2), seed=3)
        y1_implied = table.y_obs + (1 - table.t) * table.tau_true
        y0_implied = table.y_obs - table.t * table.tau_true
        assert np.allclose(y1_implied - y0_implied, table.tau_true)

    def test_deterministic_replay(self):
        g = synthesize_hypergraph(100, 8, seed=4)
        a = simulate_outcomes(g, SimulationParams(d=10), seed=42)
        b = simulate_outcomes(g, SimulationParams(d=10), seed=42)
        assert np.array_equal(a.x, b.x)
        assert np.array_equal(a.t, b.t)
        assert np.array_equal(a.y_obs, b.y_obs)
        assert np.array_equal(a.tau_true, b.tau_true)


class TestEnvironmentSummary:
    def test_triangle_treated_fractions(self):
        g = Hypergraph([[0, 1, 2]])
        table = NodeCausalTable(
            x=np.zeros((3, 2)), t=np.array([1, 0, 1]), y_obs=np.zeros(3))
        o = table.x.shape[1]
        env = environment_summary(g, table)
        assert env[1, o] == pytest.approx(1.0)   # neighbors of node 1: {0, 2}
        assert env[0, o] == pytest.approx(0.5)   # neighbors of node 0: {1, 2}
        assert np.all(env[:, o + 1] == 1)        # each node in one hyperedge

    def test_isolated_node_zeroed(self):
        g = Hypergraph([[0, 1]], node_count=3)
        table = NodeCausalTable(
            x=np.ones((3, 2)), t=np.array([1, 1, 1]), y_obs=np.zeros(3))
        env = environment_summary(g, table)
        assert np.all(env[2] == np.array([0, 0, 0, 0]))

    def test_all_neighbors_treated(self):
        g = Hypergraph([[0, 1], [0, 2]])
        table = NodeCausalTable(
            x=np.zeros((3, 1)), t=np.array([0, 1, 1]), y_obs=np.zeros(3))
        env = environment_summary(g, table)
        assert env[0, 1] == pytest.approx(1.0)

    def test_invariant_to_own_record(self):
        g = line_graph(10)
        table = simulate_outcomes(g, SimulationParams(d=3), seed=2)
        env = environment_summary(g, table)
        bent = NodeCausalTable(x=table.x.copy(), t=table.t.copy(),
                               y_obs=table.y_obs)
        bent.x[4] += 100.0
        bent.t[4] = 1 - bent.t[4]
        env2 = environment_summary(g, bent)
        assert np.allclose(env[4], env2[4])


class TestEstimator:
    def test_exact_on_noiseless_linear_data(self):
        g = synthesize_hypergraph(300, 15, seed=11)
        params = SimulationParams(d=4, noise_scale=0.0)
        table = simulate_outcomes(g, params, seed=13)
        tau_hat = estimate_ite(g, table.observed(), lam=0.0)
        assert np.allclose(tau_hat, table.tau_true, rtol=1e-8, atol=1e-9)

    def test_constant_outcomes_give_zero_effect(self):
        g = line_graph(60)
        x = np.random.default_rng(0).normal(size=(60, 3))
        t = np.array([0, 1] * 30)
        table = ObservedData(x=x, t=t, y_obs=np.full(60, 7.5))
        tau_hat = estimate_ite(g, table, lam=1.0)
        assert np.allclose(tau_hat, 0.0, atol=1e-9)

    def test_degenerate_arm_warns_and_falls_back(self):
        g = line_graph(8)
        x = np.random.default_rng(1).normal(size=(8, 2))
        t = np.array([1, 0, 0, 0, 0, 0, 0, 0])
        y = x @ np.array([1.0, -1.0]) + 2.0 * t
        with pytest.warns(DegenerateArmWarning):
            tau_hat = estimate_ite(g, ObservedData(x, t, y), lam=0.0)
        assert tau_hat.shape == (8,)

    def test_empty_arm_rejected(self):
        g = line_graph(5)
        data = ObservedData(x=np.zeros((5, 1)), t=np.ones(5, dtype=int),
                            y_obs=np.zeros(5))
        with pytest.raises(DegenerateArmError):
            estimate_ite(g, data)

    def test_observed_view_has_no_counterfactual_fields(self):
        g = line_graph(5)
        table = simulate_outcomes(g, SimulationParams(d=2), seed=0)
        view = table.observed()
        assert not hasattr(view, "tau_true")
        assert not hasattr(view, "tau_hat")

    def test_default_simulation_recovery_quality(self):
        g = synthesize_hypergraph(800, 30, seed=21)
        table = simulate_outcomes(g, SimulationParams(), seed=22)
        tau_hat = estimate_ite(g, table.observed(), lam=1.0)
        corr = np.corrcoef(tau_hat, table.tau_true)[0, 1]
        assert corr > 0.8


class TestNoiseInjection:
    def _table(self, n=1000, seed=5):
        g = line_graph(n)
        table = simulate_outcomes(g, SimulationParams(d=2), seed=seed)
        return table.with_tau_hat(table.tau_true.copy())

    def test_zero_sigma_is_identity(self):
        table = self._table()
        out = inject_noise(table, 0.0, seed=3)
        assert out is table

    def test_negative_sigma_rejected(self):
        with pytest.raises(ValueError):
            inject_noise(self._table(), -1.0, seed=0)

    def test_spec_noise_grid_supported(self):
        assert NOISE_GRID[:5] == [0.0, 2.0, 4.0, 6.0, 8.0]
        assert NOISE_GRID[5:] == [float(v) for v in range(9, 21)]
        table = self._table(n=50)
        for sigma in NOISE_GRID:
            inject_noise(table, sigma, seed=1)

    def test_sample_stddev_window(self):
        table = self._table(n=1000)
        out = inject_noise(table, 5.0, seed=77)
        sd = np.std(out.tau_hat - table.tau_hat, ddof=1)
        assert 4.6 < sd < 5.4

    def test_mean_preserving_over_seeds(self):
        table = self._table(n=400)
        drifts = [np.mean(inject_noise(table, 3.0, seed=s).tau_hat - table.tau_hat)
                  for s in range(60)]
        se = np.std(drifts, ddof=1) / np.sqrt(len(drifts))
        assert abs(np.mean(drifts)) < 3 * se

    def test_only_tau_hat_touched(self):
        table = self._table()
        out = inject_noise(table, 2.0, seed=1)
        assert out.x is table.x and out.y_obs is table.y_obs
        assert np.array_equal(out.tau_true, table.tau_true)


class TestCsv:
    def test_attrs_round_trip_bit_exact(self):
        g = synthesize_hypergraph(40, 5, seed=2)
        table = simulate_outcomes(g, SimulationParams(d=3), seed=6)
        text = dumps_attrs(g, table)
        back = loads_attrs(text, g)
        assert np.array_equal(back.x, table.x)
        assert np.array_equal(back.t, table.t)
        assert np.array_equal(back.y_obs, table.y_obs)
        assert np.array_equal(back.tau_true, table.tau_true)

    def test_ite_round_trip_bit_exact(self):
        g = synthesize_hypergraph(25, 4, seed=3)
        tau = np.random.default_rng(8).normal(size=25) * 1e3
        assert np.array_equal(loads_ite(dumps_ite(g, tau), g), tau)

    def test_attrs_header(self):
        g = Hypergraph([[0, 1]])
        table = NodeCausalTable(x=np.zeros((2, 2)), t=np.zeros(2, dtype=int),
                                y_obs=np.zeros(2))
        assert dumps_attrs(g, table).splitlines()[0] == "node,t,y,x0,x1"

    def test_unknown_node_rejected(self):
        g = Hypergraph([[0, 1]], node_labels=["a", "b"])
        with pytest.raises(ValueError, match="unknown node"):
            loads_attrs("node,t,y,x0\nzzz,0,1.0,2.0\n", g)

    def test_missing_node_rejected(self):
        g = Hypergraph([[0, 1]], node_labels=["a", "b"])
        with pytest.raises(ValueError, match="misses"):
            loads_attrs("node,t,y,x0\na,0,1.0,2.0\n", g)
