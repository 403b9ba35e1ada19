"""Directed heterogeneous graph view of a relational database.

Each row becomes a node of its table's type; each foreign-key value becomes
one directed edge child -> parent.  Keys live purely in the structure, so a
graph plus per-node attribute features is a faithful image of the database:
`graph_to_rdb(rdb_to_graph(db))` recovers `db` up to primary-key relabeling.

The diffusion model sees an undirected view (every edge usable in both
directions); the stored graph stays directed because reconstruction needs
the original edge orientation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from relsynth.codec import TableCodec, decode_features, encode_features
from relsynth.schema import Database, DatabaseSchema, DataError, Link, Table


@dataclass
class HeteroGraph:
    """Typed nodes (dense ids per table), typed directed edges, optional features.

    edges maps each Link to an (m, 2) int64 array of (child_node, parent_node)
    pairs.  features, when present, maps each table name to an (n_i, d_i)
    float64 matrix in the codec's encoded space (d_i = attribute count).
    """

    schema: DatabaseSchema
    node_counts: dict[str, int]
    edges: dict[Link, np.ndarray]
    features: dict[str, np.ndarray] | None = None
    _adjacency: dict | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        for name in self.schema.table_names:
            if name not in self.node_counts:
                raise ValueError(f"node count missing for table {name!r}")
        for link in self.schema.links:
            pairs = self.edges.get(link)
            if pairs is None:
                raise ValueError(f"edge list missing for {link.label}")
            pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
            self.edges[link] = pairs
            if len(pairs):
                if pairs[:, 0].min() < 0 or pairs[:, 0].max() >= self.node_counts[link.child]:
                    raise ValueError(f"{link.label}: child node index out of range")
                if pairs[:, 1].min() < 0 or pairs[:, 1].max() >= self.node_counts[link.parent]:
                    raise ValueError(f"{link.label}: parent node index out of range")

    def parent_map(self, link: Link) -> np.ndarray:
        """Length-n_child array mapping each child node to its unique parent.

        Raises DataError when any child node has no (or more than one) edge of
        this type, i.e. when the outdegree-1 invariant is broken.
        """
        n_child = self.node_counts[link.child]
        pairs = self.edges[link]
        degree = np.bincount(pairs[:, 0], minlength=n_child)
        if np.any(degree != 1):
            bad = int(np.flatnonzero(degree != 1)[0])
            raise DataError(
                f"incomplete foreign keys: node {bad} of type {link.child!r} has "
                f"{int(degree[bad])} edges of type {link.label} (expected 1)"
            )
        out = np.empty(n_child, dtype=np.int64)
        out[pairs[:, 0]] = pairs[:, 1]
        return out

    def check_outdegrees(self) -> None:
        for link in self.schema.links:
            self.parent_map(link)

    def adjacency(self) -> dict:
        """Cached undirected adjacency: per link, CSR in both directions."""
        if self._adjacency is None:
            adj = {}
            for link, pairs in self.edges.items():
                adj[link] = (
                    _csr(pairs[:, 0], pairs[:, 1], self.node_counts[link.child]),
                    _csr(pairs[:, 1], pairs[:, 0], self.node_counts[link.parent]),
                )
            self._adjacency = adj
        return self._adjacency

    @property
    def total_nodes(self) -> int:
        return sum(self.node_counts.values())

    def with_features(self, features: dict[str, np.ndarray]) -> "HeteroGraph":
        return HeteroGraph(self.schema, dict(self.node_counts), dict(self.edges), features)


def _csr(keys: np.ndarray, values: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """(offsets, sorted_values): values grouped by key, key k at offsets[k]:offsets[k+1]."""
    order = np.argsort(keys, kind="stable")
    counts = np.bincount(keys, minlength=n) if len(keys) else np.zeros(n, dtype=np.int64)
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    return offsets, values[order]


@dataclass
class Subgraph:
    """Induced K-hop neighborhood around a center node, over the undirected view.

    Node arrays map local -> original ids (ascending); edges are in local
    indices with original direction and type preserved.
    """

    center: tuple[str, int]  # (node type, local index)
    hops: int
    nodes: dict[str, np.ndarray]
    edges: dict[Link, np.ndarray]
    features: dict[str, np.ndarray] | None

    @property
    def center_original(self) -> tuple[str, int]:
        ctype, local = self.center
        return ctype, int(self.nodes[ctype][local])

    @property
    def n_nodes(self) -> int:
        return sum(len(v) for v in self.nodes.values())


def rdb_to_graph(db: Database, codecs: dict[str, TableCodec] | None = None) -> HeteroGraph:
    """Build the graph image of a database.

    Node i of type T is row i of table T (ingestion order).  When codecs are
    given, node features are the encoded attribute vectors; otherwise the
    graph is featureless (structure only).
    """
    node_counts = {t.name: db.tables[t.name].n_rows for t in db.schema.tables}
    pk_pos = {
        name: {pk: i for i, pk in enumerate(tab.pks.tolist())}
        for name, tab in db.tables.items()
    }
    edges = {}
    for link in db.schema.links:
        child = db.tables[link.child]
        positions = pk_pos[link.parent]
        fk_values = child.fks[link.fk_column].tolist()
        try:
            parent_idx = np.array([positions[v] for v in fk_values], dtype=np.int64)
        except KeyError as exc:
            raise DataError(f"{link.label}: dangling foreign key {exc}") from exc
        pairs = np.column_stack([np.arange(child.n_rows, dtype=np.int64), parent_idx])
        edges[link] = pairs
    features = encode_features(db, codecs) if codecs is not None else None
    return HeteroGraph(schema=db.schema, node_counts=node_counts, edges=edges, features=features)


def graph_to_rdb(
    g: HeteroGraph,
    schema: DatabaseSchema,
    codecs: dict[str, TableCodec] | None = None,
) -> Database:
    """Reconstruct a database from a graph.

    Each node of type i gets the fresh primary key (node index + 1); each edge
    contributes the parent's key to the child's foreign-key column; features
    are decoded back to attribute values.
    """
    if g.schema.table_names != schema.table_names or g.schema.links != schema.links:
        raise DataError("graph and schema disagree on tables or links")
    tables: dict[str, Table] = {}
    parent_maps = {link: g.parent_map(link) for link in schema.links}
    for ts in schema.tables:
        n = g.node_counts[ts.name]
        pks = np.array([i + 1 for i in range(n)], dtype=object)
        fks = {}
        for link in schema.links:
            if link.child == ts.name:
                fks[link.fk_column] = np.array(
                    [int(p) + 1 for p in parent_maps[link]], dtype=object
                )
        if ts.attributes:
            if codecs is None or g.features is None:
                raise DataError(
                    f"table {ts.name!r} has attribute columns but no features/codecs to decode"
                )
            attrs = decode_features(g.features[ts.name], codecs[ts.name])
        else:
            attrs = {}
        tables[ts.name] = Table(name=ts.name, pks=pks, fks=fks, attrs=attrs)
    db = Database(schema=schema, tables=tables)
    db.validate()
    return db


def k_hop_subgraph(
    g: HeteroGraph,
    center: tuple[str, int],
    k: int,
    neighbor_cap: int | None = None,
    rng: np.random.Generator | None = None,
) -> Subgraph:
    """Undirected BFS around `center`, truncated at k hops.

    With neighbor_cap set, at most that many neighbors per (node, edge type,
    direction) are kept, sampled uniformly without replacement with `rng`;
    edges are then the ones induced on the kept node set.
    """
    ctype, cidx = center
    if k < 0:
        raise ValueError("k must be non-negative")
    if neighbor_cap is not None and neighbor_cap < 1:
        raise ValueError("neighbor_cap must be >= 1")
    if neighbor_cap is not None and rng is None:
        raise ValueError("neighbor sampling requires an rng")
    if ctype not in g.node_counts:
        raise ValueError(f"unknown node type {ctype!r}")
    if not 0 <= cidx < g.node_counts[ctype]:
        raise ValueError(f"center node {cidx} out of range for type {ctype!r}")

    adj = g.adjacency()
    included: dict[str, set[int]] = {name: set() for name in g.schema.table_names}
    included[ctype].add(cidx)
    frontier: list[tuple[str, int]] = [(ctype, cidx)]

    for _ in range(k):
        new_frontier: list[tuple[str, int]] = []
        for tp, idx in frontier:
            for link in g.schema.links:
                for side, other_type in ((0, link.parent), (1, link.child)):
                    if (link.child if side == 0 else link.parent) != tp:
                        continue
                    offsets, values = adj[link][side]
                    nei = values[offsets[idx] : offsets[idx + 1]]
                    if neighbor_cap is not None and len(nei) > neighbor_cap:
                        nei = rng.choice(nei, size=neighbor_cap, replace=False)
                    for w in nei.tolist():
                        if w not in included[other_type]:
                            included[other_type].add(w)
                            new_frontier.append((other_type, w))
        frontier = new_frontier

    nodes = {
        name: np.array(sorted(included[name]), dtype=np.int64)
        for name in g.schema.table_names
    }
    local = {
        name: {int(orig): loc for loc, orig in enumerate(nodes[name])}
        for name in g.schema.table_names
    }
    edges = {}
    for link, pairs in g.edges.items():
        if len(pairs) == 0:
            edges[link] = pairs.reshape(0, 2)
            continue
        child_in = np.isin(pairs[:, 0], nodes[link.child])
        parent_in = np.isin(pairs[:, 1], nodes[link.parent])
        kept = pairs[child_in & parent_in]
        remapped = np.column_stack(
            [
                np.searchsorted(nodes[link.child], kept[:, 0]),
                np.searchsorted(nodes[link.parent], kept[:, 1]),
            ]
        ).astype(np.int64)
        edges[link] = remapped
    features = None
    if g.features is not None:
        features = {name: g.features[name][nodes[name]] for name in g.schema.table_names}
    return Subgraph(
        center=(ctype, local[ctype][cidx]),
        hops=k,
        nodes=nodes,
        edges=edges,
        features=features,
    )


def dump_graph(g: HeteroGraph, out_dir: str | Path) -> None:
    """Debug dump: JSON header plus one CSV edge list per edge type."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    header = {
        "node_counts": {k: int(v) for k, v in g.node_counts.items()},
        "edge_types": [link.label for link in g.schema.links],
    }
    (out_dir / "header.json").write_text(json.dumps(header, indent=2) + "\n", encoding="utf-8")
    for link in g.schema.links:
        pairs = g.edges[link]
        lines = ["child,parent"] + [f"{int(a)},{int(b)}" for a, b in pairs]
        path = out_dir / f"edges__{link.child}__{link.fk_column}.csv"
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
