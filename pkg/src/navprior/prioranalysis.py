"""Action-prior quantification: transition matrices, skew factors, histograms.

Transitions are directed even though navigability edges are undirected: a
path traversing u -> v contributes only to row u, because the prior being
measured is over the agent's next action at u.
"""

from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass

from navprior.dataset import PathDataset
from navprior.envgraph import EnvironmentGraph
from navprior.errors import ConfigError, DataError, FormatError


class TransitionMatrix:
    """Row map of observed next-node counts for one environment.

    Rows exist only for nodes with at least one observed outgoing
    transition; probabilities are recomputed from counts on demand so
    serialization never accumulates drift.
    """

    def __init__(self, env_id: str, rows: dict[str, dict[str, float]]):
        self.env_id = env_id
        self.rows: dict[str, dict[str, float]] = {}
        for node, counts in rows.items():
            if not counts:
                continue
            for succ, c in counts.items():
                if c <= 0:
                    raise DataError(
                        f"mtm {env_id!r}: count for ({node!r}, {succ!r}) must be > 0")
            self.rows[node] = dict(counts)
        self._probs_cache: dict[str, dict[str, float]] = {}

    def __contains__(self, node: str) -> bool:
        return node in self.rows

    def row_counts(self, node: str) -> dict[str, float] | None:
        return self.rows.get(node)

    def row_probs(self, node: str) -> dict[str, float] | None:
        probs = self._probs_cache.get(node)
        if probs is None:
            counts = self.rows.get(node)
            if counts is None:
                return None
            total = sum(counts.values())
            probs = {succ: c / total for succ, c in counts.items()}
            self._probs_cache[node] = probs
        return probs

    def max_prob(self, node: str) -> float | None:
        probs = self.row_probs(node)
        return max(probs.values()) if probs else None

    def visited_nodes(self) -> tuple[str, ...]:
        return tuple(sorted(self.rows))

    def to_json_obj(self) -> dict:
        return {
            "env_id": self.env_id,
            "rows": {node: dict(sorted(counts.items()))
                     for node, counts in sorted(self.rows.items())},
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "TransitionMatrix":
        try:
            return cls(str(obj["env_id"]),
                       {str(n): {str(s): float(c) for s, c in row.items()}
                        for n, row in obj["rows"].items()})
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            raise FormatError(f"transition matrix file: bad structure ({exc})") from exc

    def __repr__(self):
        return f"TransitionMatrix({self.env_id!r}, {len(self.rows)} rows)"


def build_mtm(ds: PathDataset, g: EnvironmentGraph) -> TransitionMatrix:
    """Count directed consecutive-pair traversals of samples in g's environment."""
    rows: dict[str, dict[str, float]] = {}
    for s in ds.samples:
        if s.env_id != g.env_id:
            continue
        for u, v in zip(s.path, s.path[1:]):
            if not g.has_edge(u, v):
                raise DataError(
                    f"path {s.path_id}: transition ({u!r}, {v!r}) is not an edge of "
                    f"{g.env_id!r}; validate the dataset first")
            rows.setdefault(u, {})
            rows[u][v] = rows[u].get(v, 0) + 1
    return TransitionMatrix(g.env_id, rows)


def merge_mtms(mtms, env_id: str = "pooled", weights=None) -> TransitionMatrix:
    """Elementwise weighted sum of transition counts across matrices."""
    mtms = list(mtms)
    if weights is None:
        weights = [1.0] * len(mtms)
    if len(weights) != len(mtms):
        raise ConfigError(f"{len(weights)} weights for {len(mtms)} matrices")
    rows: dict[str, dict[str, float]] = {}
    for mtm, w in zip(mtms, weights):
        if w <= 0:
            raise ConfigError(f"merge weight must be > 0, got {w}")
        for node, counts in mtm.rows.items():
            row = rows.setdefault(node, {})
            for succ, c in counts.items():
                row[succ] = row.get(succ, 0.0) + w * c
    return TransitionMatrix(env_id, rows)


def save_mtms(mtms) -> str:
    return json.dumps([m.to_json_obj() for m in mtms], indent=2, sort_keys=True)


def load_mtms(data: bytes | str) -> dict[str, TransitionMatrix]:
    try:
        objs = json.loads(data)
    except json.JSONDecodeError as exc:
        raise FormatError(f"transition matrix file: invalid JSON ({exc})") from exc
    if isinstance(objs, dict):
        objs = [objs]
    mtms = {}
    for obj in objs:
        m = TransitionMatrix.from_json_obj(obj)
        mtms[m.env_id] = m
    return mtms


# -- skew factors ---------------------------------------------------------


def skew_factor(mtm: TransitionMatrix, g: EnvironmentGraph, node: str) -> float | None:
    """Largest outgoing probability over the uniform action-space probability.

    None for nodes never visited in the dataset; 1 means the observed
    next-action distribution is uniform over the node's neighbors.
    """
    g.viewpoint(node)
    top = mtm.max_prob(node)
    if top is None:
        return None
    degree = g.degree(node)
    if degree == 0:
        raise DataError(
            f"node {node!r} has transitions in the mtm but no edges in {g.env_id!r}")
    return top * degree


@dataclass(frozen=True)
class SkewReport:
    """Per-node skew factors for one environment (None = never visited)."""

    env_id: str
    per_node: dict[str, float | None]
    threshold: float
    fraction_at_most_threshold: float | None  # over visited nodes only

    def visited_skews(self) -> list[float]:
        return [v for v in self.per_node.values() if v is not None]

    @property
    def none_count(self) -> int:
        return sum(1 for v in self.per_node.values() if v is None)


def build_skew_report(mtm: TransitionMatrix, g: EnvironmentGraph,
                      threshold: float = 1.5) -> SkewReport:
    per_node = {nid: skew_factor(mtm, g, nid) for nid in g.node_ids}
    visited = [v for v in per_node.values() if v is not None]
    fraction = (sum(1 for v in visited if v <= threshold) / len(visited)
                if visited else None)
    return SkewReport(g.env_id, per_node, threshold, fraction)


def skew_fractions(reports, low: float = 1.5, high: float = 2.0) -> dict[str, float]:
    """Aggregate visited-node skew statistics across environments."""
    skews = [v for r in reports for v in r.visited_skews()]
    none_count = sum(r.none_count for r in reports)
    if not skews:
        raise DataError("no visited nodes across the given skew reports")
    n = len(skews)
    return {
        "visited": n,
        "none": none_count,
        "fraction_at_most_low": sum(1 for v in skews if v <= low) / n,
        "fraction_at_least_high": sum(1 for v in skews if v >= high) / n,
        "low": low,
        "high": high,
    }


# -- histograms -----------------------------------------------------------


@dataclass(frozen=True)
class Histogram:
    """Skew-factor histogram with a trailing overflow bin and a None tally.

    bin_edges are the finite edges [1, 1+w, ..., max_bin]; counts has one
    entry per interior bin plus the final [max_bin, inf) overflow bin.
    """

    bin_edges: tuple[float, ...]
    counts: tuple[int, ...]
    none_count: int

    def to_csv(self) -> str:
        lines = ["bin_lo,bin_hi,count"]
        for i, c in enumerate(self.counts[:-1]):
            lines.append(f"{self.bin_edges[i]!r},{self.bin_edges[i + 1]!r},{c}")
        lines.append(f"{self.bin_edges[-1]!r},inf,{self.counts[-1]}")
        lines.append(f"none,,{self.none_count}")
        return "\n".join(lines) + "\n"


def skew_histogram(reports, bin_width: float = 0.25,
                   max_bin: float = 4.0) -> Histogram:
    """Bin visited-node skews into [1, 1+w), ..., [max_bin, inf); tally Nones."""
    if bin_width <= 0:
        raise ConfigError(f"bin_width must be > 0, got {bin_width}")
    if max_bin <= 1:
        raise ConfigError(f"max_bin must be > 1, got {max_bin}")
    n_interior = math.ceil((max_bin - 1) / bin_width - 1e-12)
    edges = [1.0 + i * bin_width for i in range(n_interior)]
    edges.append(max_bin)
    counts = [0] * len(edges)  # interior bins plus overflow
    none_count = 0
    for r in reports:
        for v in r.per_node.values():
            if v is None:
                none_count += 1
                continue
            idx = bisect.bisect_right(edges, v) - 1
            counts[min(max(idx, 0), len(edges) - 1)] += 1
    return Histogram(tuple(edges), tuple(counts), none_count)
