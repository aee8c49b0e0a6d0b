"""Stochastic propagation engines on the hypergraph.

Two models are implemented:

* ``GIC`` — generalized independent cascade.  At each step, every node that
  became active on the previous step gets one chance to activate each
  still-inactive neighbor; with uniform probability p the joint chance of
  activation is 1 - (1-p)^k for k fresh attackers.  A neighbor reachable
  through several shared hyperedges still counts once.

* ``SICP`` — susceptible/infected with a contact process.  At every step,
  each currently active node picks one of its hyperedges uniformly at
  random and independently infects each susceptible member of that edge
  with probability p.  There is no recovery; the run lasts ``horizon``
  steps unless no activation can ever happen again.

All randomness is counter-based (see ``rng``): a GIC attacker's coin
sequence is keyed on (round, attacker), an SICP attacker's on (round,
step, attacker).  Because a node's behavior never depends on *when* it was
activated, two runs sharing a seed are monotone-coupled across nested seed
sets, and results are independent of scheduling or worker count.

Per-attempt Bernoulli coins over an adjacency list are realized by
geometric skip-sampling (jump lengths ~ Geometric(p)), which is
distribution-identical to drawing one coin per list entry but costs about
1 + successes draws per attempt instead of the full list length.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .hypergraph import Hypergraph
from .rng import derive_key, mix64, uniforms

_SALT_ROUND = 0x1D
_STEP_MULT = np.uint64(0x2545F4914F6CDD1D)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_CHOICE_OFFSET = np.uint64(1) << np.uint64(52)
_STREAM_SHIFT = np.uint64(20)  # per-node attack stream: node << 20 | draw index


class DiffusionModel(str, enum.Enum):
    GIC = "gic"
    SICP = "sicp"


@dataclass(frozen=True)
class DiffusionConfig:
    """Propagation model, activation probability, horizon and seed."""

    model: DiffusionModel = DiffusionModel.GIC
    p: float = 0.01
    horizon: int = 10
    seed: int = 0
    # optional per-ordered-pair overrides of p as (u, v, p_uv) triples,
    # applied by GIC only; SICP always uses the scalar p
    pair_probs: tuple[tuple[int, int, float], ...] | None = None

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"activation probability {self.p} outside [0, 1]")
        if self.horizon < 0:
            raise ValueError("horizon must be >= 0")
        if not isinstance(self.model, DiffusionModel):
            object.__setattr__(self, "model", DiffusionModel(self.model))


@dataclass(frozen=True)
class SimulationTrace:
    """Nested layers of active nodes, one entry per completed step."""

    layers: tuple[frozenset[int], ...]
    final_active: frozenset[int]


def round_keys(seed: int, rounds: int) -> np.ndarray:
    """Independent stream keys for Monte-Carlo rounds 0..rounds-1."""
    base = derive_key(seed, _SALT_ROUND)
    with np.errstate(over="ignore"):
        return mix64(np.uint64(base)
                     + np.arange(1, rounds + 1, dtype=np.uint64) * _GOLDEN)


def _skip_hits(row_keys, stream_ids, starts, degs, indices, p):
    """Successes of per-entry Bernoulli(p) trials along list slices.

    Row i holds a list slice indices[starts[i]:starts[i]+degs[i]]; its coin
    stream is (row_keys[i], stream_ids[i]).  Returns (row_idx, hit_values)
    arrays covering every success of every row, by geometric skips.
    """
    n_rows = len(row_keys)
    empty = np.empty(0, dtype=np.int64)
    if n_rows == 0 or p <= 0.0:
        return empty, empty
    if p >= 1.0:
        total = int(degs.sum())
        if total == 0:
            return empty, empty
        rows = np.repeat(np.arange(n_rows), degs)
        ends = np.cumsum(degs)
        slots = (np.arange(total, dtype=np.int64)
                 - np.repeat(ends - degs, degs) + np.repeat(starts, degs))
        return rows, indices[slots]
    inv = 1.0 / np.log1p(-p)
    pos = np.zeros(n_rows, dtype=np.int64)
    alive = np.flatnonzero(degs > 0)
    out_rows, out_hits = [], []
    draw = 0
    with np.errstate(over="ignore"):
        shifted = stream_ids.astype(np.uint64) << _STREAM_SHIFT
    while alive.size:
        u01 = uniforms(row_keys[alive], shifted[alive] + np.uint64(draw))
        gap = np.floor(np.log1p(-u01) * inv).astype(np.int64)
        pos[alive] += gap + 1
        scored = pos[alive] <= degs[alive]
        alive = alive[scored]
        if alive.size:
            out_rows.append(alive.copy())
            out_hits.append(indices[starts[alive] + pos[alive] - 1])
        draw += 1
    if not out_rows:
        return empty, empty
    return np.concatenate(out_rows), np.concatenate(out_hits)


def _pair_prob_array(g: Hypergraph, p: float, pair_probs) -> np.ndarray:
    """Per-attempt probabilities aligned with neighbor_arrays."""
    indptr, indices = g.neighbor_arrays()
    out = np.full(indices.shape[0], p, dtype=np.float64)
    for u, v, puv in pair_probs:
        lo, hi = int(indptr[u]), int(indptr[u + 1])
        j = lo + int(np.searchsorted(indices[lo:hi], v))
        if j >= hi or indices[j] != v:
            raise ValueError(f"pair probability given for non-neighbors ({u}, {v})")
        out[j] = puv
    return out


def _seed_pairs(seed_masks: np.ndarray):
    rows, nodes = np.nonzero(seed_masks)
    return rows, nodes


def gic_final_masks(
    g: Hypergraph,
    seed_masks: np.ndarray,
    cfg: DiffusionConfig,
    keys: np.ndarray,
    record_layers: bool = False,
):
    """Run independent GIC cascades for several rounds at once.

    seed_masks: (R, N) boolean; keys: (R,) uint64 stream keys.  Returns the
    final (R, N) active mask plus the recorded layers of round 0.
    """
    nbr_indptr, nbr_indices = g.neighbor_arrays()
    n = g.node_count
    deg = np.diff(nbr_indptr)
    pair_p = _pair_prob_array(g, cfg.p, cfg.pair_probs) if cfg.pair_probs else None
    active = seed_masks.copy()
    flat = active.reshape(-1)
    fr_rows, fr_nodes = _seed_pairs(seed_masks)
    layers: list[frozenset[int]] = []
    if record_layers:
        layers.append(frozenset(np.flatnonzero(active[0]).tolist()))
    for _ in range(cfg.horizon):
        if fr_rows.size == 0:
            break
        if pair_p is None:
            hr, hv = _skip_hits(keys[fr_rows], fr_nodes,
                                nbr_indptr[fr_nodes], deg[fr_nodes],
                                nbr_indices, cfg.p)
            hr, hv = fr_rows[hr], hv
        else:
            # per-pair probabilities: draw one coin per (attacker, neighbor)
            counts = deg[fr_nodes]
            rr = np.repeat(np.arange(fr_rows.size), counts)
            total = int(counts.sum())
            ends = np.cumsum(counts)
            slots = (np.arange(total, dtype=np.int64)
                     - np.repeat(ends - counts, counts)
                     + np.repeat(nbr_indptr[fr_nodes], counts))
            vv = nbr_indices[slots]
            uu = fr_nodes[rr]
            coins = uniforms(keys[fr_rows[rr]],
                             uu.astype(np.uint64) * np.uint64(n)
                             + vv.astype(np.uint64)) < pair_p[slots]
            hr, hv = fr_rows[rr[coins]], vv[coins]
        keep = ~flat[hr * n + hv]
        ids = np.unique(hr[keep] * n + hv[keep])
        flat[ids] = True
        fr_rows, fr_nodes = ids // n, ids % n
        if record_layers:
            layer = frozenset(np.flatnonzero(active[0]).tolist())
            if layer != layers[-1]:
                layers.append(layer)
    return active, tuple(layers)


def sicp_final_masks(
    g: Hypergraph,
    seed_masks: np.ndarray,
    cfg: DiffusionConfig,
    keys: np.ndarray,
    record_layers: bool = False,
):
    """Run independent SI contact-process cascades for several rounds at once."""
    star_indptr, star_indices = g.star_arrays()
    mem_indptr, mem_indices = g.member_arrays()
    n = g.node_count
    star_deg = np.diff(star_indptr)
    active = seed_masks.copy()
    flat = active.reshape(-1)
    act_rows, act_nodes = _seed_pairs(seed_masks)
    spreaders = star_deg[act_nodes] > 0
    act_rows, act_nodes = act_rows[spreaders], act_nodes[spreaders]
    layers: list[frozenset[int]] = []
    if record_layers:
        layers.append(frozenset(np.flatnonzero(active[0]).tolist()))
    for step in range(1, cfg.horizon + 1):
        if act_rows.size == 0 or active.all():
            break
        # single-run trace mode: stop once no activation can ever happen
        if record_layers and len(keys) == 1 \
                and not _sicp_alive(g, np.flatnonzero(active[0])):
            break
        with np.errstate(over="ignore"):
            step_keys = mix64(keys[act_rows] ^ (np.uint64(step) * _STEP_MULT))
        cu = uniforms(step_keys, act_nodes.astype(np.uint64) + _CHOICE_OFFSET)
        choice = (cu * star_deg[act_nodes]).astype(np.int64)
        edges = star_indices[star_indptr[act_nodes] + choice]
        hr, hv = _skip_hits(step_keys, act_nodes,
                            mem_indptr[edges],
                            mem_indptr[edges + 1] - mem_indptr[edges],
                            mem_indices, cfg.p)
        if hr.size:
            rows = act_rows[hr]
            keep = ~flat[rows * n + hv]
            ids = np.unique(rows[keep] * n + hv[keep])
            flat[ids] = True
            new_rows, new_nodes = ids // n, ids % n
            spreaders = star_deg[new_nodes] > 0
            act_rows = np.concatenate([act_rows, new_rows[spreaders]])
            act_nodes = np.concatenate([act_nodes, new_nodes[spreaders]])
            order = np.lexsort((act_nodes, act_rows))
            act_rows, act_nodes = act_rows[order], act_nodes[order]
        if record_layers:
            layer = frozenset(np.flatnonzero(active[0]).tolist())
            if layer != layers[-1]:
                layers.append(layer)
    return active, tuple(layers)


def _sicp_alive(g: Hypergraph, active_nodes) -> bool:
    """True while some active node has an edge with an inactive member."""
    active = set(int(v) for v in active_nodes)
    for u in active:
        for e in g.stars[u]:
            if any(v not in active for v in g.members[e]):
                return True
    return False


def _seed_mask(g: Hypergraph, seeds, rounds: int) -> np.ndarray:
    seeds = sorted(set(int(s) for s in seeds))
    for s in seeds:
        g._check_node(s)
    mask = np.zeros((rounds, g.node_count), dtype=bool)
    if seeds:
        mask[:, seeds] = True
    return mask


def run_gic(g: Hypergraph, seeds, cfg: DiffusionConfig) -> SimulationTrace:
    """Single GIC cascade with layer recording (round 0 of cfg.seed)."""
    mask = _seed_mask(g, seeds, 1)
    keys = round_keys(cfg.seed, 1)
    active, layers = gic_final_masks(g, mask, cfg, keys, record_layers=True)
    return SimulationTrace(layers, frozenset(np.flatnonzero(active[0]).tolist()))


def run_sicp(g: Hypergraph, seeds, cfg: DiffusionConfig) -> SimulationTrace:
    """Single SICP cascade with layer recording (round 0 of cfg.seed)."""
    mask = _seed_mask(g, seeds, 1)
    keys = round_keys(cfg.seed, 1)
    active, layers = sicp_final_masks(g, mask, cfg, keys, record_layers=True)
    return SimulationTrace(layers, frozenset(np.flatnonzero(active[0]).tolist()))


def run(g: Hypergraph, seeds, cfg: DiffusionConfig) -> SimulationTrace:
    if DiffusionModel(cfg.model) is DiffusionModel.GIC:
        return run_gic(g, seeds, cfg)
    return run_sicp(g, seeds, cfg)


def final_masks(
    g: Hypergraph,
    seed_masks: np.ndarray,
    cfg: DiffusionConfig,
    keys: np.ndarray,
) -> np.ndarray:
    """Batched engine entry: row i runs seed_masks[i] under stream keys[i]."""
    if DiffusionModel(cfg.model) is DiffusionModel.GIC:
        active, _ = gic_final_masks(g, seed_masks, cfg, keys)
    else:
        active, _ = sicp_final_masks(g, seed_masks, cfg, keys)
    return active


def dump_trace(g: Hypergraph, trace: SimulationTrace) -> str:
    """Debug rendering: one line per step listing newly activated labels."""
    lines = []
    prev: frozenset[int] = frozenset()
    for t, layer in enumerate(trace.layers):
        fresh = sorted(layer - prev)
        lines.append(f"step {t}: " + ",".join(g.node_labels[v] for v in fresh))
        prev = layer
    return "\n".join(lines) + "\n"


def load_pair_probabilities(path, g: Hypergraph) -> tuple[tuple[int, int, float], ...]:
    """Read a per-ordered-pair activation probability CSV: u,v,p by label."""
    label_to_id = {lab: i for i, lab in enumerate(g.node_labels)}
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#") or line == "u,v,p":
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise ValueError(f"line {lineno}: expected 'u,v,p'")
            u, v, p = parts
            if u not in label_to_id or v not in label_to_id:
                raise ValueError(f"line {lineno}: unknown node label")
            p = float(p)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"line {lineno}: probability {p} outside [0, 1]")
            out.append((label_to_id[u], label_to_id[v], p))
    return tuple(out)
