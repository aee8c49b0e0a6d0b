"""Potential-outcome simulation and individual treatment effect recovery.

A node's record holds covariates x, a binary treatment t, the observed
outcome of the treated-or-control arm actually taken, and (for simulated
data only) the ground-truth effect.  Estimation sees only the observed
fields: ``estimate_ite`` takes an :class:`ObservedData` view that simply
does not carry the counterfactual columns, so the missing-data discipline
is structural rather than a convention.

The estimator fits one L2-regularized linear outcome model per treatment
arm on features [x, environment summary] and differences the two
predictions.  A learned representation model could be substituted through
the same CSV interface (see read_ite/write_ite).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from .hypergraph import Hypergraph


class DegenerateArmError(ValueError):
    """A treatment arm is empty; no outcome model can be fitted for it."""


class DegenerateArmWarning(UserWarning):
    """An arm is too small for separate models; pooled fallback used."""


@dataclass(frozen=True)
class SimulationParams:
    """Coefficient scales of the synthetic outcome process.

    Outcomes are linear:  y(arm) = b0.x + arm * (effect_bias + b1.x +
    b2.mean_neighbor_x) + noise, with the coefficient vectors drawn once
    per table from the master seed.  The same noise draw is shared by both
    arms so the stored ground-truth effect is itself noise-free.
    """

    d: int = 10
    confounding_scale: float = 1.0
    baseline_scale: float = 1.0
    effect_scale: float = 5.0
    spillover_scale: float = 3.0
    effect_bias: float = 10.0
    noise_scale: float = 1.0

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("covariate dimension must be >= 1")
        if self.noise_scale < 0:
            raise ValueError("noise scale must be >= 0")


@dataclass(frozen=True)
class ObservedData:
    """The estimator-facing view: covariates, treatment, observed outcome."""

    x: np.ndarray
    t: np.ndarray
    y_obs: np.ndarray

    @property
    def d(self) -> int:
        return self.x.shape[1]


@dataclass(frozen=True)
class NodeCausalTable:
    """Per-node causal records, aligned with hypergraph node ids."""

    x: np.ndarray                 # (n, d)
    t: np.ndarray                 # (n,) in {0, 1}
    y_obs: np.ndarray             # (n,)
    tau_hat: np.ndarray | None = None
    tau_true: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1]

    def observed(self) -> ObservedData:
        return ObservedData(self.x, self.t, self.y_obs)

    def with_tau_hat(self, tau_hat: np.ndarray) -> "NodeCausalTable":
        return replace(self, tau_hat=np.asarray(tau_hat, dtype=np.float64))


def draw_coefficients(params: SimulationParams, rng: np.random.Generator):
    """Coefficient vectors of the outcome process, in draw order:
    treatment logit, baseline, direct effect, neighbor spillover."""
    d = params.d
    w = rng.normal(0.0, params.confounding_scale / np.sqrt(d), d)
    b0 = rng.normal(0.0, params.baseline_scale / np.sqrt(d), d)
    b1 = rng.normal(0.0, params.effect_scale / np.sqrt(d), d)
    b2 = rng.normal(0.0, params.spillover_scale / np.sqrt(d), d)
    return w, b0, b1, b2


def simulate_outcomes(
    g: Hypergraph, params: SimulationParams = SimulationParams(), seed: int = 0
) -> NodeCausalTable:
    """Draw covariates, confounded treatments and linear potential outcomes."""
    rng = np.random.default_rng(seed)
    n, d = g.node_count, params.d
    w, b0, b1, b2 = draw_coefficients(params, rng)
    x = rng.normal(0.0, 1.0, (n, d))
    t = (rng.random(n) < 1.0 / (1.0 + np.exp(-x @ w))).astype(np.int8)
    nbr_mean = _neighbor_means(g, x)
    tau = params.effect_bias + x @ b1 + nbr_mean @ b2
    noise = rng.normal(0.0, params.noise_scale, n) if params.noise_scale > 0 else np.zeros(n)
    y0 = x @ b0 + noise
    y1 = y0 + tau
    y_obs = np.where(t == 1, y1, y0)
    return NodeCausalTable(x=x, t=t, y_obs=y_obs, tau_true=tau)


def _neighbor_means(g: Hypergraph, x: np.ndarray) -> np.ndarray:
    out = np.zeros_like(x)
    for v in range(g.node_count):
        nbrs = g.neighbors(v)
        if nbrs:
            out[v] = x[sorted(nbrs)].mean(axis=0)
    return out


def environment_summary(g: Hypergraph, data) -> np.ndarray:
    """Per-node summary of everyone else: (mean neighbor covariates,
    treated fraction among neighbors, own hyperedge count).

    Depends only on the graph and the other nodes' records; isolated nodes
    get zero means and treated fraction 0.
    """
    x, t = data.x, data.t
    n, d = x.shape
    out = np.zeros((n, d + 2))
    out[:, :d] = _neighbor_means(g, x)
    for v in range(n):
        nbrs = sorted(g.neighbors(v))
        if nbrs:
            out[v, d] = float(np.mean(t[nbrs]))
        out[v, d + 1] = len(g.stars[v])
    return out


def _ridge_fit(features: np.ndarray, y: np.ndarray, lam: float) -> np.ndarray:
    """Least squares with L2 penalty on everything but the intercept."""
    design = np.hstack([features, np.ones((features.shape[0], 1))])
    if lam == 0.0:
        coef, *_ = np.linalg.lstsq(design, y, rcond=None)
        return coef
    k = design.shape[1]
    penalty = lam * np.eye(k)
    penalty[-1, -1] = 0.0
    return np.linalg.solve(design.T @ design + penalty, design.T @ y)


def _predict(features: np.ndarray, coef: np.ndarray) -> np.ndarray:
    return features @ coef[:-1] + coef[-1]


def estimate_ite(g: Hypergraph, data: ObservedData, lam: float = 1.0) -> np.ndarray:
    """Two-arm outcome regression on [x, environment summary].

    Returns the estimated effect for every node, treated or not.  When an
    arm has fewer samples than features + 1, falls back (with a warning)
    to a single pooled model with the treatment flag as a feature.
    """
    o = environment_summary(g, data)
    features = np.hstack([data.x, o])
    t = np.asarray(data.t).astype(bool)
    if not t.any() or t.all():
        raise DegenerateArmError("both treatment arms must be non-empty")
    min_samples = features.shape[1] + 1
    n1, n0 = int(t.sum()), int((~t).sum())
    if n1 < min_samples or n0 < min_samples:
        warnings.warn(
            f"arm sizes ({n1} treated, {n0} control) below {min_samples}; "
            "falling back to a pooled model with treatment as a feature",
            DegenerateArmWarning,
        )
        pooled = np.hstack([features, t.astype(np.float64)[:, None]])
        coef = _ridge_fit(pooled, data.y_obs, lam)
        f1 = np.hstack([features, np.ones((len(t), 1))])
        f0 = np.hstack([features, np.zeros((len(t), 1))])
        return _predict(f1, coef) - _predict(f0, coef)
    coef1 = _ridge_fit(features[t], data.y_obs[t], lam)
    coef0 = _ridge_fit(features[~t], data.y_obs[~t], lam)
    return _predict(features, coef1) - _predict(features, coef0)


def inject_noise(table: NodeCausalTable, sigma: float, seed: int) -> NodeCausalTable:
    """Add iid N(0, sigma^2) perturbations to the estimated effects."""
    if sigma < 0:
        raise ValueError("noise standard deviation must be >= 0")
    if table.tau_hat is None:
        raise ValueError("table has no estimated effects to perturb")
    if sigma == 0:
        return table
    rng = np.random.default_rng(seed)
    return table.with_tau_hat(table.tau_hat + rng.normal(0.0, sigma, table.n))


# -- CSV interchange -------------------------------------------------------
#
# Node attributes:  node,t,y,x0..x{d-1}[,tau_true]
# Estimated effects: node,tau_hat
# Floats carry 17 significant digits so a round trip is bit-exact.


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def dumps_attrs(g: Hypergraph, table: NodeCausalTable) -> str:
    d = table.d
    header = "node,t,y," + ",".join(f"x{i}" for i in range(d))
    if table.tau_true is not None:
        header += ",tau_true"
    lines = [header]
    for v in range(table.n):
        parts = [g.node_labels[v], str(int(table.t[v])), _fmt(table.y_obs[v])]
        parts += [_fmt(xi) for xi in table.x[v]]
        if table.tau_true is not None:
            parts.append(_fmt(table.tau_true[v]))
        lines.append(",".join(parts))
    return "\n".join(lines) + "\n"


def loads_attrs(text: str, g: Hypergraph) -> NodeCausalTable:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty attribute data")
    header = lines[0].split(",")
    if header[:3] != ["node", "t", "y"]:
        raise ValueError("attribute header must start with node,t,y")
    has_tau = header[-1] == "tau_true"
    d = len(header) - 3 - (1 if has_tau else 0)
    if d < 1 or header[3] != "x0":
        raise ValueError("attribute header must carry x0..x{d-1}")
    label_to_id = {lab: i for i, lab in enumerate(g.node_labels)}
    n = g.node_count
    x = np.zeros((n, d))
    t = np.zeros(n, dtype=np.int8)
    y = np.zeros(n)
    tau = np.zeros(n) if has_tau else None
    seen = np.zeros(n, dtype=bool)
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != len(header):
            raise ValueError(f"line {lineno}: expected {len(header)} fields")
        label = parts[0]
        if label not in label_to_id:
            raise ValueError(f"line {lineno}: unknown node label {label!r}")
        v = label_to_id[label]
        if seen[v]:
            raise ValueError(f"line {lineno}: duplicate node {label!r}")
        seen[v] = True
        t[v] = int(parts[1])
        y[v] = float(parts[2])
        x[v] = [float(p) for p in parts[3:3 + d]]
        if has_tau:
            tau[v] = float(parts[3 + d])
    if not seen.all():
        missing = g.node_labels[int(np.flatnonzero(~seen)[0])]
        raise ValueError(f"attribute data misses node {missing!r}")
    return NodeCausalTable(x=x, t=t, y_obs=y, tau_true=tau)


def dumps_ite(g: Hypergraph, tau_hat: np.ndarray) -> str:
    lines = ["node,tau_hat"]
    for v in range(g.node_count):
        lines.append(f"{g.node_labels[v]},{_fmt(tau_hat[v])}")
    return "\n".join(lines) + "\n"


def loads_ite(text: str, g: Hypergraph) -> np.ndarray:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != "node,tau_hat":
        raise ValueError("effect file must start with header node,tau_hat")
    label_to_id = {lab: i for i, lab in enumerate(g.node_labels)}
    tau = np.full(g.node_count, np.nan)
    for lineno, line in enumerate(lines[1:], start=2):
        label, _, value = line.partition(",")
        if label not in label_to_id:
            raise ValueError(f"line {lineno}: unknown node label {label!r}")
        tau[label_to_id[label]] = float(value)
    if np.isnan(tau).any():
        raise ValueError("effect file misses some nodes")
    return tau


def write_text(path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def read_text(path) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()
