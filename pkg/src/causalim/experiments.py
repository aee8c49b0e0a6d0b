"""Experiment protocols: dataset synthesis, selection runs, parameter
sweeps and bound-verification campaigns.

Every runner is a pure function of its inputs plus the master seed: output
CSV text is byte-identical on replay regardless of worker count.  Wall
times are therefore never written into the main CSVs; they go to separate
timing sidecars.
"""

from __future__ import annotations

import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import bounds as bounds_mod
from .causal import (DegenerateArmError, DegenerateArmWarning, NodeCausalTable,
                     SimulationParams, dumps_attrs, dumps_ite, estimate_ite,
                     inject_noise, loads_attrs, loads_ite, simulate_outcomes)
from .diffusion import DiffusionConfig, final_masks, round_keys
from .hypergraph import Hypergraph, dumps_hypergraph, loads_hypergraph
from .rng import derive_key
from .selection import (Objective, SelectionTrace, celf_select, greedy_select,
                        random_select)
from .spread import BudgetExceeded, DEFAULT_BUDGET

METHODS = ("cauim-greedy", "cauim-celf", "celf-count", "random")

NOISE_GRID = [0.0, 2.0, 4.0, 6.0, 8.0] + [float(s) for s in range(9, 21)]
P_GRID = [0.005, 0.008, 0.009, 0.01, 0.012, 0.015, 0.02]
ITER_GRID = [25, 50, 100]

_SALT_REP = 0x0E1
_SALT_NOISE = 0x0E2
_SALT_SELECT = 0x0E3
_SALT_EVAL = 0x0E4
_SALT_RANDOM = 0x0E5


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


# -- synthetic dataset ------------------------------------------------------


def synthesize_hypergraph(
    nodes: int = 4400,
    edges: int = 120,
    seed: int = 0,
    membership_weights: tuple[float, float, float] = (0.7, 0.2, 0.1),
) -> Hypergraph:
    """Author/book style assignment: every node joins 1-3 hyperedges.

    A hyperedge left empty by the draw grabs one extra random node so the
    requested edge count survives.
    """
    if nodes < 1 or edges < 1:
        raise ValueError("need at least one node and one hyperedge")
    rng = np.random.default_rng(seed)
    w = np.asarray(membership_weights, dtype=float)
    w = w / w.sum()
    counts = rng.choice([1, 2, 3], size=nodes, p=w)
    members: list[list[int]] = [[] for _ in range(edges)]
    for v in range(nodes):
        joined = rng.choice(edges, size=min(counts[v], edges), replace=False)
        for e in joined:
            members[int(e)].append(v)
    for e in range(edges):
        if not members[e]:
            while True:
                v = int(rng.integers(nodes))
                if v not in members[e]:
                    members[e].append(v)
                    break
    node_labels = [f"b{v}" for v in range(nodes)]
    edge_labels = [f"a{e}" for e in range(edges)]
    return Hypergraph(members, node_count=nodes,
                      node_labels=node_labels, edge_labels=edge_labels)


def generate_dataset(
    nodes: int = 4400,
    edges: int = 120,
    seed: int = 0,
    membership_weights: tuple[float, float, float] = (0.7, 0.2, 0.1),
    params: SimulationParams = SimulationParams(),
) -> tuple[str, str]:
    """Graph file text plus node-attribute CSV (with ground-truth effects)."""
    g = synthesize_hypergraph(nodes, edges, seed, membership_weights)
    table = simulate_outcomes(g, params, seed=int(derive_key(seed, 0xDA7A)))
    return dumps_hypergraph(g), dumps_attrs(g, table)


# -- experiment configuration ----------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    """Knobs shared by the selection and sweep protocols."""

    method: str = "cauim-celf"
    k: int = 15
    p: float = 0.01
    model: str = "sicp"
    horizon: int = 10
    select_rounds: int = 25
    eval_rounds: int = 25
    repetitions: int = 20
    seed: int = 0
    noise_sigma: float = 0.0
    l2: float = 1.0
    stop_on_negative: bool = False
    workers: int = 1

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {METHODS}")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if self.select_rounds < 1 or self.eval_rounds < 1:
            raise ValueError("round counts must be >= 1")
        if self.noise_sigma < 0:
            raise ValueError("noise sigma must be >= 0")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        DiffusionConfig(model=self.model, p=self.p, horizon=self.horizon)


def parse_config_text(text: str) -> dict[str, str]:
    """Flat `key = value` configuration lines; '#' starts a comment."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


# -- selection experiment ---------------------------------------------------


def _mc_curve(g, weights, seeds, cfg: DiffusionConfig, rounds: int) -> np.ndarray:
    """Mean spread of every seed prefix, sharing the round keys (CRN)."""
    k = len(seeds)
    n = g.node_count
    keys = round_keys(cfg.seed, rounds)
    out = np.empty(k)
    chunk = max(1, (1 << 26) // max(1, n * rounds))
    for lo in range(0, k, chunk):
        hi = min(k, lo + chunk)
        mask = np.zeros(((hi - lo) * rounds, n), dtype=bool)
        for i in range(lo, hi):
            mask[(i - lo) * rounds:(i - lo + 1) * rounds, list(seeds[:i + 1])] = True
        active = final_masks(g, mask, cfg, np.tile(keys, hi - lo))
        sums = active @ weights
        out[lo:hi] = sums.reshape(hi - lo, rounds).mean(axis=1)
    return out


def _select_one_rep(g, table, cfg: ExperimentConfig, rep: int):
    """One repetition: select seeds, then score every prefix."""
    start = time.monotonic()
    rep_seed = int(derive_key(cfg.seed, _SALT_REP, rep))
    if cfg.noise_sigma > 0:
        table = inject_noise(table, cfg.noise_sigma,
                             seed=int(derive_key(rep_seed, _SALT_NOISE)))
    weights = table.tau_hat
    sel_cfg = DiffusionConfig(model=cfg.model, p=cfg.p, horizon=cfg.horizon,
                              seed=int(derive_key(rep_seed, _SALT_SELECT)))
    if cfg.method == "cauim-greedy":
        trace = greedy_select(g, weights, sel_cfg, cfg.k, cfg.select_rounds,
                              stop_on_negative=cfg.stop_on_negative)
    elif cfg.method == "cauim-celf":
        trace = celf_select(g, weights, sel_cfg, cfg.k, cfg.select_rounds,
                            stop_on_negative=cfg.stop_on_negative)
    elif cfg.method == "celf-count":
        trace = celf_select(g, weights, sel_cfg, cfg.k, cfg.select_rounds,
                            objective=Objective.UNIT_COUNT,
                            stop_on_negative=cfg.stop_on_negative)
    else:
        trace = random_select(g, cfg.k, seed=int(derive_key(rep_seed, _SALT_RANDOM)))
    eval_cfg = DiffusionConfig(model=cfg.model, p=cfg.p, horizon=cfg.horizon,
                               seed=int(derive_key(rep_seed, _SALT_EVAL)))
    curve = _mc_curve(g, weights, trace.seeds, eval_cfg, cfg.eval_rounds)
    return trace, curve, time.monotonic() - start


def _select_rep_worker(args):
    return _select_one_rep(*args)


def _map_jobs(worker, jobs, workers: int):
    if workers <= 1 or len(jobs) <= 1:
        return [worker(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(worker, jobs))


def trace_csv(g: Hypergraph, trace: SelectionTrace) -> str:
    lines = ["# causalim select-trace csv v1", "step,node,gain,sigma,evals"]
    for step, node in enumerate(trace.seeds):
        lines.append(",".join([
            str(step + 1), g.node_labels[node], _fmt(trace.gains[step]),
            _fmt(trace.sigma_curve[step]), str(trace.evals[step]),
        ]))
    return "\n".join(lines) + "\n"


def run_select_experiment(g: Hypergraph, table: NodeCausalTable,
                          cfg: ExperimentConfig):
    """R repetitions of the configured method with per-prefix evaluation.

    Returns (trace_csv of repetition 0, results_csv, timings_csv).
    """
    if table.tau_hat is None:
        raise ValueError("selection needs estimated effects on the table")
    jobs = [(g, table, cfg, rep) for rep in range(cfg.repetitions)]
    results = _map_jobs(_select_rep_worker, jobs, cfg.workers)
    depth = min(len(curve) for _, curve, _ in results)
    curves = np.vstack([curve[:depth] for _, curve, _ in results])
    res_lines = ["# causalim select-results csv v1",
                 "method,seed_count,sigma_mean,sigma_std"]
    for sc in range(depth):
        col = curves[:, sc]
        std = float(col.std(ddof=1)) if len(col) > 1 else 0.0
        res_lines.append(",".join([
            cfg.method, str(sc + 1), _fmt(col.mean()), _fmt(std)]))
    timing_lines = ["# causalim timings csv v1", "rep,wall_time_s"]
    for rep, (_, _, wall) in enumerate(results):
        timing_lines.append(f"{rep},{wall:.3f}")
    return (trace_csv(g, results[0][0]),
            "\n".join(res_lines) + "\n",
            "\n".join(timing_lines) + "\n")


# -- sweeps -----------------------------------------------------------------


def default_grid(param: str) -> list[float]:
    if param == "noise":
        return list(NOISE_GRID)
    if param == "p":
        return list(P_GRID)
    if param == "iter":
        return [float(x) for x in ITER_GRID]
    raise ValueError(f"unknown sweep parameter {param!r}; use noise, p or iter")


def _sweep_point_cfg(cfg: ExperimentConfig, param: str, value: float) -> ExperimentConfig:
    if param == "noise":
        return replace(cfg, noise_sigma=float(value))
    if param == "p":
        return replace(cfg, p=float(value))
    if param == "iter":
        r = int(value)
        return replace(cfg, select_rounds=r, eval_rounds=r)
    raise ValueError(f"unknown sweep parameter {param!r}")


def _sweep_point_worker(args):
    g, table, cfg, param, value = args
    start = time.monotonic()
    point_cfg = _sweep_point_cfg(replace(cfg, workers=1), param, value)
    jobs = [(g, table, point_cfg, rep) for rep in range(point_cfg.repetitions)]
    finals = [curve[-1] for _, curve, _ in (_select_rep_worker(j) for j in jobs)]
    finals = np.asarray(finals)
    std = float(finals.std(ddof=1)) if len(finals) > 1 else 0.0
    return float(finals.mean()), std, time.monotonic() - start


def run_sweep_experiment(g: Hypergraph, table: NodeCausalTable,
                         cfg: ExperimentConfig, param: str,
                         grid: list[float] | None = None):
    """Grid sweep of noise scale, activation probability or MC rounds.

    Returns (sweep_csv, timings_csv); the sweep rows carry the final
    (k-seed) spread estimate's mean and across-repetition stddev.
    """
    if table.tau_hat is None:
        raise ValueError("sweeps need estimated effects on the table")
    grid = default_grid(param) if grid is None else [float(v) for v in grid]
    jobs = [(g, table, cfg, param, v) for v in grid]
    results = _map_jobs(_sweep_point_worker, jobs, cfg.workers)
    lines = ["# causalim sweep csv v1", "param,value,sigma_mean,sigma_std"]
    timing = ["# causalim timings csv v1", "param,value,wall_time_s"]
    for v, (mean, std, wall) in zip(grid, results):
        lines.append(f"{param},{_fmt(v)},{_fmt(mean)},{_fmt(std)}")
        timing.append(f"{param},{_fmt(v)},{wall:.3f}")
    return "\n".join(lines) + "\n", "\n".join(timing) + "\n"


# -- verification campaign ---------------------------------------------------


@dataclass(frozen=True)
class CampaignSpec:
    """Randomized tiny-instance campaign parameters."""

    theorem1_instances: int = 200
    theorem2_instances: int = 100
    corollary_instances: int = 100
    gamma: float = 0.01
    seed: int = 0
    tau_all_one: bool = False
    min_nodes: int = 4
    max_nodes: int = 10
    max_edges: int = 6
    p_choices: tuple[float, ...] = (0.2, 0.5, 0.8)
    k_choices: tuple[int, ...] = (1, 2, 3)
    horizon_choices: tuple[int, ...] = (2, 3)
    cap: int = 3
    budget: int = DEFAULT_BUDGET
    workers: int = 1


def random_tiny_instance(seed: int, spec: CampaignSpec, tau_mode: str = "mixed"):
    """Deterministic enumerable instance: graph, weights, diffusion config, k."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(spec.min_nodes, spec.max_nodes + 1))
    m = int(rng.integers(2, spec.max_edges + 1))
    members = []
    for _ in range(m):
        size = int(rng.integers(2, min(4, n) + 1))
        members.append(sorted(int(v) for v in rng.choice(n, size=size, replace=False)))
    g = Hypergraph(members, node_count=n)
    if tau_mode == "ones":
        weights = np.ones(n)
    elif tau_mode == "positive":
        weights = rng.uniform(0.1, 2.0, n)
    else:
        weights = rng.uniform(-2.0, 2.0, n)
    model = "gic" if seed % 2 == 0 else "sicp"
    cfg = DiffusionConfig(
        model=model,
        p=float(rng.choice(spec.p_choices)),
        horizon=int(rng.choice(spec.horizon_choices)),
        seed=seed,
    )
    k = int(min(n, rng.choice(spec.k_choices)))
    return g, weights, cfg, k


_COROLLARY_PARAMS = SimulationParams(
    d=1, confounding_scale=0.5, baseline_scale=1.0, effect_scale=0.2,
    spillover_scale=0.2, effect_bias=10.0, noise_scale=0.05)


def corollary_instance(seed: int, spec: CampaignSpec):
    """Tiny instance with simulated outcomes and estimator-derived effects."""
    g, _, cfg, k = random_tiny_instance(seed, spec, tau_mode="mixed")
    table = simulate_outcomes(g, _COROLLARY_PARAMS, seed=seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateArmWarning)
        tau_hat = estimate_ite(g, table.observed(), lam=1e-6)
    return g, table.with_tau_hat(tau_hat), cfg, k


_REPORT_COLUMNS = (
    "kind,instance,nodes,hyperedges,model,p,horizon,k,weights,sigma,sigma_opt,"
    "epsilon1,epsilon2,gamma,epsilon,condition_ok,delta,rhs,slack,holds,"
    "positive_rhs,positive_holds")


def _instance_meta(g, cfg, k):
    return {
        "nodes": g.node_count, "hyperedges": g.edge_count,
        "model": cfg.model.value, "p": cfg.p, "horizon": cfg.horizon, "k": k,
    }


def _campaign_worker(args):
    kind, index, seed, spec = args
    try:
        if kind == "theorem1":
            g, weights, cfg, k = random_tiny_instance(
                seed, spec, "ones" if spec.tau_all_one else "mixed")
            rep = bounds_mod.verify_theorem1(g, weights, cfg, k,
                                             cap=spec.cap, budget=spec.budget)
            if not rep.holds and spec.cap < g.node_count - 1:
                # the capped epsilon1 understates the true constant, which
                # makes the check stricter than the bound; re-verify exactly
                rep = bounds_mod.verify_theorem1(g, weights, cfg, k,
                                                 cap=g.node_count - 1,
                                                 budget=spec.budget)
            row = {
                "kind": kind, "instance": index, **_instance_meta(g, cfg, k),
                "weights": "ones" if spec.tau_all_one else "mixed",
                "sigma": rep.sigma_greedy, "sigma_opt": rep.sigma_opt,
                "epsilon1": rep.epsilon1, "epsilon2": rep.epsilon2,
                "gamma": "", "epsilon": "", "condition_ok": "", "delta": "",
                "rhs": rep.rhs, "slack": rep.slack, "holds": rep.holds,
                "positive_rhs": rep.positive_rhs if rep.positive_weights else "",
                "positive_holds": rep.positive_holds if rep.positive_weights else "",
            }
            ok = rep.holds and (rep.positive_holds is not False)
            return row, ok, None
        if kind == "theorem2":
            g, weights, cfg, k = random_tiny_instance(seed, spec, "mixed")
            rep2 = bounds_mod.verify_theorem2(g, weights, cfg, k, spec.gamma,
                                              cap=spec.cap, budget=spec.budget)
            if not rep2.holds and spec.cap < g.node_count - 1:
                rep2 = bounds_mod.verify_theorem2(g, weights, cfg, k, spec.gamma,
                                                  cap=g.node_count - 1,
                                                  budget=spec.budget)
            row = {
                "kind": kind, "instance": index, **_instance_meta(g, cfg, k),
                "weights": "mixed",
                "sigma": rep2.perturbed_sigma, "sigma_opt": rep2.sigma_opt,
                "epsilon1": rep2.epsilon1, "epsilon2": rep2.epsilon2,
                "gamma": rep2.gamma, "epsilon": rep2.epsilon,
                "condition_ok": rep2.condition_ok, "delta": "",
                "rhs": rep2.rhs, "slack": rep2.slack, "holds": rep2.holds,
                "positive_rhs": "", "positive_holds": "",
            }
            return row, rep2.holds, None
        g, table, cfg, k = corollary_instance(seed, spec)
        rep3 = bounds_mod.verify_corollary1(g, table, cfg, k,
                                            cap=spec.cap, budget=spec.budget)
        if not rep3.holds and spec.cap < g.node_count - 1:
            rep3 = bounds_mod.verify_corollary1(g, table, cfg, k,
                                                cap=g.node_count - 1,
                                                budget=spec.budget)
        row = {
            "kind": kind, "instance": index, **_instance_meta(g, cfg, k),
            "weights": "estimated",
            "sigma": rep3.perturbed_sigma, "sigma_opt": rep3.sigma_opt,
            "epsilon1": rep3.epsilon1, "epsilon2": rep3.epsilon2,
            "gamma": rep3.gamma, "epsilon": rep3.epsilon,
            "condition_ok": rep3.condition_ok, "delta": rep3.delta,
            "rhs": rep3.rhs, "slack": rep3.slack, "holds": rep3.holds,
            "positive_rhs": "", "positive_holds": "",
        }
        return row, rep3.holds, None
    except BudgetExceeded as exc:
        return None, True, str(exc)
    except DegenerateArmError as exc:
        return None, True, str(exc)


def _collect_instances(kind: str, count: int, spec: CampaignSpec, offset: int):
    """Fixed-seed instance stream; instances beyond the budget are skipped
    and replaced by the next stream positions."""
    rows: list[dict] = []
    skipped = 0
    next_index = 0
    while len(rows) < count:
        if next_index >= count * 4:
            raise RuntimeError(
                f"could not assemble {count} enumerable {kind} instances")
        need = count - len(rows)
        jobs = [(kind, next_index + j,
                 int(derive_key(spec.seed, offset, next_index + j)), spec)
                for j in range(need)]
        next_index += need
        for row, ok, _err in _map_jobs(_campaign_worker, jobs, spec.workers):
            if row is None:
                skipped += 1
                continue
            row["ok"] = ok
            rows.append(row)
    return rows, skipped


def run_verification_campaign(spec: CampaignSpec):
    """Drive all bound checks; returns (reports_csv, summary, all_hold)."""
    all_rows: list[dict] = []
    skipped_total = 0
    stages = []
    if spec.theorem1_instances:
        stages.append(("theorem1", spec.theorem1_instances, 0x71))
    if spec.theorem2_instances and spec.gamma > 0 and not spec.tau_all_one:
        stages.append(("theorem2", spec.theorem2_instances, 0x72))
    if spec.corollary_instances and not spec.tau_all_one:
        stages.append(("corollary1", spec.corollary_instances, 0x73))
    for kind, count, offset in stages:
        rows, skipped = _collect_instances(kind, count, spec, offset)
        all_rows.extend(rows)
        skipped_total += skipped
    lines = ["# causalim bound-reports csv v1", _REPORT_COLUMNS]
    for row in all_rows:
        lines.append(",".join(_cell(row.get(col, "")) for col in
                              _REPORT_COLUMNS.split(",")))
    all_hold = all(row["ok"] for row in all_rows)
    per_kind = {}
    for row in all_rows:
        kind = row["kind"]
        per_kind.setdefault(kind, [0, 0])
        per_kind[kind][0] += 1
        per_kind[kind][1] += 0 if row["ok"] else 1
    summary_lines = []
    for kind, (total, failures) in sorted(per_kind.items()):
        state = "PASS" if failures == 0 else "FAIL"
        summary_lines.append(f"{kind}: {total - failures}/{total} hold [{state}]")
    summary_lines.append(f"skipped (budget/degenerate): {skipped_total}")
    summary_lines.append("overall: " + ("PASS" if all_hold else "FAIL"))
    return "\n".join(lines) + "\n", "\n".join(summary_lines) + "\n", all_hold


def _cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return _fmt(value)
    return str(value)


# -- end-to-end text-in/text-out entry points (service + CLI) ----------------


def run_generate(nodes: int, edges: int, covariate_dim: int, seed: int,
                 membership_weights=(0.7, 0.2, 0.1),
                 params: SimulationParams | None = None):
    if params is None:
        params = SimulationParams(d=covariate_dim)
    graph_text, attrs_csv = generate_dataset(nodes, edges, seed,
                                             tuple(membership_weights), params)
    return {"graph_text": graph_text, "attrs_csv": attrs_csv,
            "node_count": nodes, "edge_count": edges}


def run_estimate(graph_text: str, attrs_csv: str, l2: float = 1.0):
    g = loads_hypergraph(graph_text)
    table = loads_attrs(attrs_csv, g)
    fallback = False
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", DegenerateArmWarning)
        tau_hat = estimate_ite(g, table.observed(), lam=l2)
        fallback = any(issubclass(w.category, DegenerateArmWarning) for w in caught)
    correlation = None
    if table.tau_true is not None and np.std(table.tau_true) > 0 \
            and np.std(tau_hat) > 0:
        correlation = float(np.corrcoef(tau_hat, table.tau_true)[0, 1])
    return {"ite_csv": dumps_ite(g, tau_hat), "correlation_with_true": correlation,
            "fallback_used": fallback}


def _load_select_inputs(graph_text: str, attrs_csv: str, ite_csv: str | None,
                        l2: float):
    g = loads_hypergraph(graph_text)
    table = loads_attrs(attrs_csv, g)
    if ite_csv is not None:
        table = table.with_tau_hat(loads_ite(ite_csv, g))
    else:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DegenerateArmWarning)
            table = table.with_tau_hat(estimate_ite(g, table.observed(), lam=l2))
    return g, table


def run_select(graph_text: str, attrs_csv: str, ite_csv: str | None,
               cfg: ExperimentConfig):
    g, table = _load_select_inputs(graph_text, attrs_csv, ite_csv, cfg.l2)
    trace, results, timings = run_select_experiment(g, table, cfg)
    return {"trace_csv": trace, "results_csv": results, "timings_csv": timings}


def run_sweep(graph_text: str, attrs_csv: str, ite_csv: str | None,
              cfg: ExperimentConfig, param: str, grid: list[float] | None):
    g, table = _load_select_inputs(graph_text, attrs_csv, ite_csv, cfg.l2)
    sweep, timings = run_sweep_experiment(g, table, cfg, param, grid)
    return {"sweep_csv": sweep, "timings_csv": timings}


def run_verify(spec: CampaignSpec):
    reports, summary, all_hold = run_verification_campaign(spec)
    return {"reports_csv": reports, "summary": summary, "all_hold": all_hold}
