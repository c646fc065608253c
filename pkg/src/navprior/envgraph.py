"""Environment graphs: viewpoints, navigability edges, geodesic queries.

Graphs come from two sources: Matterport-style connectivity JSON (one file
per scan) and synthetic random geometric graphs with symbolic node labels.
Both are immutable after construction and safe for concurrent reads.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from navprior import kernels
from navprior.errors import ConfigError, DataError, FormatError


@dataclass(frozen=True)
class Viewpoint:
    """A discrete location the agent can occupy."""

    id: str
    position: tuple[float, float, float]
    included: bool = True
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        if len(self.position) != 3 or not all(math.isfinite(c) for c in self.position):
            raise DataError(f"viewpoint {self.id!r}: position must be 3 finite floats")


def euclidean_distance(a: Viewpoint, b: Viewpoint) -> float:
    """Straight-line distance in meters between two viewpoints."""
    return math.dist(a.position, b.position)


class EnvironmentGraph:
    """Undirected navigability graph over viewpoints.

    Node order (and therefore the agent's action-space order) is
    lexicographic by id everywhere, which makes every downstream
    tie-break deterministic.
    """

    def __init__(self, env_id: str, nodes, edges):
        self.env_id = env_id
        self._nodes: dict[str, Viewpoint] = {}
        for vp in nodes:
            if vp.id in self._nodes:
                raise DataError(f"duplicate viewpoint id {vp.id!r} in env {env_id!r}")
            self._nodes[vp.id] = vp

        self.node_ids: tuple[str, ...] = tuple(sorted(self._nodes))
        self._index: dict[str, int] = {nid: i for i, nid in enumerate(self.node_ids)}

        canonical: set[tuple[str, str]] = set()
        for a, b in edges:
            if a == b:
                raise DataError(f"self-loop on node {a!r} in env {env_id!r}")
            for nid in (a, b):
                if nid not in self._nodes:
                    raise DataError(f"edge references unknown node {nid!r} in env {env_id!r}")
                if not self._nodes[nid].included:
                    raise DataError(f"edge touches excluded node {nid!r} in env {env_id!r}")
            canonical.add((a, b) if a < b else (b, a))
        self.edges: frozenset[tuple[str, str]] = frozenset(canonical)

        adj: dict[str, list[str]] = {nid: [] for nid in self.node_ids}
        for a, b in self.edges:
            adj[a].append(b)
            adj[b].append(a)
        self._adj: dict[str, tuple[str, ...]] = {
            nid: tuple(sorted(nbrs)) for nid, nbrs in adj.items()
        }

        # CSR arrays for the kernels, in lexicographic node order.
        indptr = np.zeros(len(self.node_ids) + 1, dtype=np.int64)
        indices: list[int] = []
        weights: list[float] = []
        for i, nid in enumerate(self.node_ids):
            for nbr in self._adj[nid]:
                indices.append(self._index[nbr])
                weights.append(euclidean_distance(self._nodes[nid], self._nodes[nbr]))
            indptr[i + 1] = len(indices)
        self._indptr = indptr
        self._indices = np.asarray(indices, dtype=np.int64)
        self._weights = np.asarray(weights, dtype=np.float64)
        self._sssp_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    # -- basic queries ------------------------------------------------

    @property
    def n_nodes(self) -> int:
        return len(self.node_ids)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def viewpoint(self, node_id: str) -> Viewpoint:
        try:
            return self._nodes[node_id]
        except KeyError:
            raise KeyError(f"unknown node id {node_id!r} in env {self.env_id!r}") from None

    def __contains__(self, node_id: str) -> bool:
        return node_id in self._nodes

    def index_of(self, node_id: str) -> int:
        self.viewpoint(node_id)
        return self._index[node_id]

    def neighbors(self, node_id: str) -> tuple[str, ...]:
        """Adjacent node ids, sorted lexicographically (the action space)."""
        self.viewpoint(node_id)
        return self._adj[node_id]

    def degree(self, node_id: str) -> int:
        return len(self.neighbors(node_id))

    def has_edge(self, a: str, b: str) -> bool:
        return ((a, b) if a < b else (b, a)) in self.edges

    def euclidean(self, a: str, b: str) -> float:
        return euclidean_distance(self.viewpoint(a), self.viewpoint(b))

    # -- geodesics ----------------------------------------------------

    def _sssp(self, source_id: str) -> tuple[np.ndarray, np.ndarray]:
        src = self.index_of(source_id)
        hit = self._sssp_cache.get(src)
        if hit is None:
            hit = kernels.dijkstra(self._indptr, self._indices, self._weights, src)
            self._sssp_cache[src] = hit
        return hit

    def distances_from(self, source_id: str) -> np.ndarray:
        """Geodesic distance from source to every node, by node index."""
        return self._sssp(source_id)[0]

    def geodesic_distance(self, a: str, b: str) -> float:
        """Minimum-weight path length in meters; inf when unreachable."""
        if a == b:
            self.viewpoint(a)
            return 0.0
        return float(self.distances_from(a)[self.index_of(b)])

    def shortest_path(self, a: str, b: str) -> list[str] | None:
        """Deterministic minimum-weight path a..b, or None when unreachable."""
        dist, pred = self._sssp(a)
        j = self.index_of(b)
        if not math.isfinite(dist[j]):
            return None
        chain = [j]
        while chain[-1] != self._index[a]:
            chain.append(int(pred[chain[-1]]))
        return [self.node_ids[i] for i in reversed(chain)]

    def connected_components(self) -> list[set[str]]:
        remaining = set(self.node_ids)
        comps: list[set[str]] = []
        while remaining:
            root = min(remaining)
            comp = {root}
            stack = [root]
            while stack:
                for nbr in self._adj[stack.pop()]:
                    if nbr not in comp:
                        comp.add(nbr)
                        stack.append(nbr)
            comps.append(comp)
            remaining -= comp
        return comps

    def __repr__(self) -> str:
        return (f"EnvironmentGraph({self.env_id!r}, {self.n_nodes} nodes, "
                f"{self.n_edges} edges)")


# -- Matterport-style connectivity loader ------------------------------


def load_connectivity(data: bytes | str, env_id: str) -> EnvironmentGraph:
    """Parse a connectivity JSON file into a graph.

    An edge (i, j) exists iff unobstructed[i][j] and unobstructed[j][i]
    are both set and both viewpoints are included. Excluded viewpoints
    are kept in the node set with no edges.
    """
    try:
        records = json.loads(data)
    except json.JSONDecodeError as exc:
        raise FormatError(f"connectivity file for {env_id!r}: invalid JSON ({exc})") from exc
    if not isinstance(records, list):
        raise FormatError(f"connectivity file for {env_id!r}: expected a JSON array")

    n = len(records)
    nodes: list[Viewpoint] = []
    unobstructed: list[list[bool]] = []
    for i, rec in enumerate(records):
        if not isinstance(rec, dict):
            raise FormatError(f"record {i}: expected an object")
        try:
            image_id = rec["image_id"]
            included = bool(rec["included"])
            pose = rec["pose"]
            unobs = rec["unobstructed"]
        except KeyError as exc:
            raise FormatError(f"record {i}: missing field {exc.args[0]!r}") from None
        if not isinstance(pose, list) or len(pose) != 16:
            raise FormatError(f"record {i}: pose must have 16 entries")
        if not isinstance(unobs, list) or len(unobs) != n:
            raise FormatError(
                f"record {i}: unobstructed has {len(unobs) if isinstance(unobs, list) else 'non-list'}"
                f" entries, expected {n}")
        position = (float(pose[3]), float(pose[7]), float(pose[11]))
        nodes.append(Viewpoint(str(image_id), position, included=included))
        unobstructed.append([bool(x) for x in unobs])

    edges = []
    for i in range(n):
        if not nodes[i].included:
            continue
        for j in range(i + 1, n):
            if nodes[j].included and unobstructed[i][j] and unobstructed[j][i]:
                edges.append((nodes[i].id, nodes[j].id))
    return EnvironmentGraph(env_id, nodes, edges)


# -- synthetic environments ---------------------------------------------

DEFAULT_LABEL_VOCAB = (
    "red", "blue", "green", "white", "black", "yellow",
    "door", "lamp", "sofa", "plant", "window", "shelf",
    "stairs", "rug", "mirror", "desk",
)


@dataclass(frozen=True)
class SynthConfig:
    """Random-geometric-graph generator settings."""

    n_nodes: int = 60
    radius: float = 6.0
    extent: tuple[float, float, float] = (30.0, 30.0, 3.0)
    label_vocab: tuple[str, ...] = DEFAULT_LABEL_VOCAB
    labels_per_node: int = 2
    max_attempts: int = 20

    def validate(self) -> None:
        if self.n_nodes < 2:
            raise ConfigError(f"n_nodes must be >= 2, got {self.n_nodes}")
        if self.radius <= 0:
            raise ConfigError(f"radius must be > 0, got {self.radius}")
        if len(self.extent) != 3 or any(e <= 0 for e in self.extent):
            raise ConfigError(f"extent must be 3 positive floats, got {self.extent}")
        if self.labels_per_node < 0 or self.labels_per_node > len(self.label_vocab):
            raise ConfigError(
                f"labels_per_node must be in [0, {len(self.label_vocab)}], "
                f"got {self.labels_per_node}")
        if self.max_attempts < 1:
            raise ConfigError(f"max_attempts must be >= 1, got {self.max_attempts}")


def _components_from_adjacency(n: int, adj: list[list[int]]) -> list[list[int]]:
    seen = [False] * n
    comps = []
    for root in range(n):
        if seen[root]:
            continue
        comp = [root]
        seen[root] = True
        stack = [root]
        while stack:
            for v in adj[stack.pop()]:
                if not seen[v]:
                    seen[v] = True
                    comp.append(v)
                    stack.append(v)
        comps.append(comp)
    return comps


def generate_synthetic_env(cfg: SynthConfig, rng: np.random.Generator,
                           env_id: str = "synth") -> EnvironmentGraph:
    """Random geometric graph: nodes uniform in the box, edge iff within radius.

    Retries with fresh positions while disconnected; after max_attempts the
    largest connected component of the last attempt is returned. A pure
    function of (cfg, generator state).

    Node ids are assigned in spatial (x, y, z) order, so an id denotes a
    consistent region of the box in every environment drawn from the same
    config. Ids thereby act as state-appearance identities: cross-environment
    statistics keyed on them (e.g. pooled transition counts) transfer the way
    habits keyed on how a place looks would.
    """
    cfg.validate()
    n = cfg.n_nodes
    width = max(3, len(str(n - 1)))
    extent = np.asarray(cfg.extent, dtype=np.float64)

    for attempt in range(cfg.max_attempts):
        pos = rng.random((n, 3)) * extent
        labels = []
        for _ in range(n):
            if cfg.labels_per_node:
                picks = rng.choice(len(cfg.label_vocab), size=cfg.labels_per_node,
                                   replace=False)
                labels.append(tuple(cfg.label_vocab[j] for j in picks))
            else:
                labels.append(())
        diff = pos[:, None, :] - pos[None, :, :]
        dmat = np.sqrt((diff * diff).sum(axis=-1))
        adj: list[list[int]] = [[] for _ in range(n)]
        pairs = []
        for i in range(n):
            for j in range(i + 1, n):
                if dmat[i, j] <= cfg.radius:
                    adj[i].append(j)
                    adj[j].append(i)
                    pairs.append((i, j))
        comps = _components_from_adjacency(n, adj)
        if len(comps) == 1:
            keep = comps[0]
            break
    else:
        comps.sort(key=lambda c: (-len(c), c[0]))
        keep = comps[0]

    kept = sorted(keep, key=lambda i: (pos[i, 0], pos[i, 1], pos[i, 2]))
    kept_set = set(kept)
    ids = {i: f"n{rank:0{width}d}" for rank, i in enumerate(kept)}
    nodes = [Viewpoint(ids[i], tuple(float(c) for c in pos[i]), True, labels[i])
             for i in kept]
    edges = [(ids[i], ids[j]) for i, j in pairs if i in kept_set and j in kept_set]
    return EnvironmentGraph(env_id, nodes, edges)


# -- self-describing JSON serialization ---------------------------------


def env_to_json_obj(g: EnvironmentGraph) -> dict:
    return {
        "env_id": g.env_id,
        "nodes": [
            {
                "id": vp.id,
                "position": list(vp.position),
                "included": vp.included,
                "labels": list(vp.labels),
            }
            for vp in (g.viewpoint(nid) for nid in g.node_ids)
        ],
        "edges": [list(e) for e in sorted(g.edges)],
    }


def save_env_json(g: EnvironmentGraph) -> str:
    return json.dumps(env_to_json_obj(g), indent=2, sort_keys=True)


def load_env_json(data: bytes | str) -> EnvironmentGraph:
    try:
        obj = json.loads(data)
    except json.JSONDecodeError as exc:
        raise FormatError(f"environment file: invalid JSON ({exc})") from exc
    try:
        nodes = [
            Viewpoint(str(rec["id"]), tuple(float(c) for c in rec["position"]),
                      bool(rec.get("included", True)),
                      tuple(str(t) for t in rec.get("labels", ())))
            for rec in obj["nodes"]
        ]
        edges = [(str(a), str(b)) for a, b in obj["edges"]]
        return EnvironmentGraph(str(obj["env_id"]), nodes, edges)
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"environment file: bad structure ({exc})") from exc


def load_graph_dir(path) -> dict[str, EnvironmentGraph]:
    """Load every environment JSON in a directory.

    ``<env_id>_connectivity.json`` files go through the connectivity
    loader; any other ``*.json`` is treated as self-describing.
    """
    from pathlib import Path

    root = Path(path)
    if not root.is_dir():
        raise DataError(f"graph directory not found: {root}")
    graphs: dict[str, EnvironmentGraph] = {}
    for file in sorted(root.glob("*.json")):
        if file.name.endswith("_connectivity.json"):
            env_id = file.name[: -len("_connectivity.json")]
            g = load_connectivity(file.read_bytes(), env_id)
        else:
            g = load_env_json(file.read_bytes())
        if g.env_id in graphs:
            raise DataError(f"duplicate environment id {g.env_id!r} in {root}")
        graphs[g.env_id] = g
    if not graphs:
        raise DataError(f"no environment JSON files found in {root}")
    return graphs
