"""Immutable hypergraph structure, ingestion and star expansion.

Nodes and hyperedges carry dense integer ids; the original string labels
from an input file are kept in a remap table so results can be written
back in the caller's vocabulary.  The structure is frozen after
construction, which makes concurrent reads from simulation workers safe.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np


class HypergraphError(ValueError):
    """Structural or parse problem in hypergraph input."""


class EmptyGraphError(HypergraphError):
    """Input contained no hyperedges."""


@dataclass(frozen=True)
class StarExpansion:
    """Bipartite node/hyperedge incidence graph.

    Left vertices are the hypergraph nodes, right vertices the hyperedges;
    there is one edge (v, h) per membership, so the edge count equals the
    sum of hyperedge sizes.
    """

    node_count: int
    edge_count: int
    pairs: tuple[tuple[int, int], ...]


class Hypergraph:
    """Incidence structure with node->edges (stars) and edge->nodes maps.

    Member lists and star lists are sorted, deduplicated tuples, so every
    traversal order is deterministic.  Isolated nodes (appearing in no
    hyperedge) are permitted; they never transmit anything.
    """

    __slots__ = (
        "node_count", "edge_count", "members", "stars",
        "node_labels", "edge_labels", "_csr",
    )

    def __init__(
        self,
        members: Sequence[Sequence[int]],
        node_count: int | None = None,
        node_labels: Sequence[str] | None = None,
        edge_labels: Sequence[str] | None = None,
    ):
        clean: list[tuple[int, ...]] = []
        max_node = -1
        for e, mem in enumerate(members):
            mem = list(mem)
            if not mem:
                raise HypergraphError(f"hyperedge {e} is empty")
            if len(set(mem)) != len(mem):
                raise HypergraphError(f"hyperedge {e} contains duplicate nodes")
            if min(mem) < 0:
                raise HypergraphError(f"hyperedge {e} contains a negative node id")
            max_node = max(max_node, max(mem))
            clean.append(tuple(sorted(mem)))
        n = max_node + 1 if node_count is None else node_count
        if n <= max_node:
            raise HypergraphError("node_count smaller than largest member id")
        stars: list[list[int]] = [[] for _ in range(n)]
        for e, mem in enumerate(clean):
            for v in mem:
                stars[v].append(e)
        self.node_count = n
        self.edge_count = len(clean)
        self.members = tuple(clean)
        self.stars = tuple(tuple(s) for s in stars)
        self.node_labels = tuple(node_labels) if node_labels is not None else tuple(
            f"n{i}" for i in range(n))
        self.edge_labels = tuple(edge_labels) if edge_labels is not None else tuple(
            f"e{i}" for i in range(self.edge_count))
        if len(self.node_labels) != n or len(self.edge_labels) != self.edge_count:
            raise HypergraphError("label table size mismatch")
        self._csr: dict[str, np.ndarray] = {}

    # -- traversal -------------------------------------------------------

    def neighbors(self, v: int) -> frozenset[int]:
        """Union of v's hyperedge members, excluding v itself."""
        self._check_node(v)
        out: set[int] = set()
        for e in self.stars[v]:
            out.update(self.members[e])
        out.discard(v)
        return frozenset(out)

    def star_expansion(self) -> StarExpansion:
        pairs = tuple(
            (v, e) for e in range(self.edge_count) for v in self.members[e]
        )
        return StarExpansion(self.node_count, self.edge_count, pairs)

    def components(self) -> list[frozenset[int]]:
        """Node sets of the star-expansion connected components."""
        seen = [False] * self.node_count
        comps = []
        for start in range(self.node_count):
            if seen[start]:
                continue
            stack, comp = [start], {start}
            seen[start] = True
            while stack:
                u = stack.pop()
                for e in self.stars[u]:
                    for w in self.members[e]:
                        if not seen[w]:
                            seen[w] = True
                            comp.add(w)
                            stack.append(w)
            comps.append(frozenset(comp))
        return comps

    def _check_node(self, v: int) -> None:
        if not 0 <= v < self.node_count:
            raise HypergraphError(f"node id {v} out of range [0, {self.node_count})")

    # -- flat arrays for the simulation engines --------------------------

    def _arrays(self, kind: str) -> tuple[np.ndarray, np.ndarray]:
        """CSR-style (indptr, indices) views; built lazily, then cached."""
        if kind not in self._csr:
            if kind == "members":
                lists: Iterable[Sequence[int]] = self.members
                count = self.edge_count
            elif kind == "stars":
                lists = self.stars
                count = self.node_count
            elif kind == "neighbors":
                lists = [sorted(self.neighbors(v)) for v in range(self.node_count)]
                count = self.node_count
            else:
                raise KeyError(kind)
            indptr = np.zeros(count + 1, dtype=np.int64)
            for i, row in enumerate(lists):
                indptr[i + 1] = indptr[i] + len(row)
            indices = np.fromiter(
                (x for row in lists for x in row), dtype=np.int64, count=indptr[-1])
            self._csr[kind + "_indptr"] = indptr
            self._csr[kind] = indices
        return self._csr[kind + "_indptr"], self._csr[kind]

    def member_arrays(self):
        return self._arrays("members")

    def star_arrays(self):
        return self._arrays("stars")

    def neighbor_arrays(self):
        return self._arrays("neighbors")

    # -- dunder ----------------------------------------------------------

    def __repr__(self):
        return f"Hypergraph(nodes={self.node_count}, hyperedges={self.edge_count})"

    def __eq__(self, other):
        return (
            isinstance(other, Hypergraph)
            and self.node_count == other.node_count
            and self.members == other.members
            and self.node_labels == other.node_labels
            and self.edge_labels == other.edge_labels
        )

    def __hash__(self):
        return hash((self.node_count, self.members))


def neighbors(g: Hypergraph, v: int) -> frozenset[int]:
    return g.neighbors(v)


def star_expansion(g: Hypergraph) -> StarExpansion:
    return g.star_expansion()


# -- file format ----------------------------------------------------------
#
# One hyperedge per line:  edge_label<TAB>node_label(,node_label)*
# '#' starts a comment line; labels are arbitrary non-empty strings without
# tabs or commas.


def loads_hypergraph(text: str) -> Hypergraph:
    node_ids: dict[str, int] = {}
    node_labels: list[str] = []
    edge_labels: list[str] = []
    members: list[list[int]] = []
    seen_edges: set[str] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "\t" not in line:
            raise HypergraphError(f"line {lineno}: expected 'edge<TAB>nodes'")
        edge_label, _, node_part = line.partition("\t")
        edge_label = edge_label.strip()
        if not edge_label:
            raise HypergraphError(f"line {lineno}: empty hyperedge label")
        if edge_label in seen_edges:
            raise HypergraphError(f"line {lineno}: duplicate hyperedge label {edge_label!r}")
        seen_edges.add(edge_label)
        labels = [p.strip() for p in node_part.split(",")]
        if any(not p for p in labels):
            raise HypergraphError(f"line {lineno}: empty node label")
        mem = []
        for lab in labels:
            if lab not in node_ids:
                node_ids[lab] = len(node_labels)
                node_labels.append(lab)
            mem.append(node_ids[lab])
        if len(set(mem)) != len(mem):
            raise HypergraphError(
                f"line {lineno}: duplicate node within hyperedge {edge_label!r}")
        members.append(mem)
        edge_labels.append(edge_label)
    if not members:
        raise EmptyGraphError("no hyperedges found in input")
    return Hypergraph(members, node_labels=node_labels, edge_labels=edge_labels)


def load_hypergraph(path) -> Hypergraph:
    with open(path, "r", encoding="utf-8") as fh:
        return loads_hypergraph(fh.read())


def dumps_hypergraph(g: Hypergraph) -> str:
    lines = []
    for e in range(g.edge_count):
        nodes = ",".join(g.node_labels[v] for v in g.members[e])
        lines.append(f"{g.edge_labels[e]}\t{nodes}")
    return "\n".join(lines) + "\n"


def save_hypergraph(g: Hypergraph, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(dumps_hypergraph(g))
