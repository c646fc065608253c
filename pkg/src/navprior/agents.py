"""Navigation agents over environment graphs.

Four policies: uniform-random steps, greedy over a transition matrix,
a templated instruction follower, and a prior/language blend. The speaker
counterpart (generate_instruction) emits structured label directives, one
per hop; it replaces a learned instruction generator at desk scale, which
is the central scoping decision of this toolkit and is deliberately
surfaced in the docs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from navprior.dataset import PathSample
from navprior.envgraph import EnvironmentGraph
from navprior.errors import ConfigError, DataError
from navprior.prioranalysis import TransitionMatrix

STOP_BUDGET = "step-budget"
STOP_ACTION = "stop-action"
STOP_DEAD_END = "dead-end"

AMBIG_TOKEN = "AMBIG"


@dataclass(frozen=True)
class AgentTrace:
    """Visited node sequence of one rollout, including the start node."""

    env_id: str
    start: str
    visited: tuple[str, ...]
    stopped_by: str
    misses: tuple[int, ...] = ()  # follower steps where no neighbor matched

    def __post_init__(self):
        if not self.visited or self.visited[0] != self.start:
            raise DataError("trace must begin at its start node")


@dataclass(frozen=True)
class Instruction:
    """One directive (a set of attribute tokens) per hop of the source path."""

    steps: tuple[tuple[str, ...], ...]


def _pick(u: float, n: int) -> int:
    j = int(u * n)
    return n - 1 if j >= n else j


def run_random_agent(g: EnvironmentGraph, start: str, T: int,
                     rng: np.random.Generator) -> AgentTrace:
    """T uniform steps over the current action space."""
    g.viewpoint(start)
    visited = [start]
    for _ in range(T):
        nbrs = g.neighbors(visited[-1])
        if not nbrs:
            return AgentTrace(g.env_id, start, tuple(visited), STOP_DEAD_END)
        visited.append(nbrs[_pick(rng.random(), len(nbrs))])
    return AgentTrace(g.env_id, start, tuple(visited), STOP_BUDGET)


def run_greedy_mtm_agent(g: EnvironmentGraph, mtm: TransitionMatrix, start: str,
                         T: int, rng: np.random.Generator | None = None,
                         fallback: str = "uniform") -> AgentTrace:
    """T greedy steps: argmax transition probability at the current node.

    Ties break toward the lexicographically smallest neighbor. At a node
    with no transition row the agent falls back to a uniform random step
    (rng required) or stops, per ``fallback``.
    """
    if fallback not in ("uniform", "stop"):
        raise ConfigError(f"unknown fallback {fallback!r}, expected 'uniform' or 'stop'")
    g.viewpoint(start)
    visited = [start]
    for _ in range(T):
        nbrs = g.neighbors(visited[-1])
        if not nbrs:
            return AgentTrace(g.env_id, start, tuple(visited), STOP_DEAD_END)
        probs = mtm.row_probs(visited[-1])
        if probs is None:
            if fallback == "stop":
                return AgentTrace(g.env_id, start, tuple(visited), STOP_ACTION)
            if rng is None:
                raise ConfigError("uniform fallback needs a random generator")
            visited.append(nbrs[_pick(rng.random(), len(nbrs))])
            continue
        # nbrs is sorted and max() keeps the first of equal keys, so ties
        # already break toward the smallest id
        visited.append(max(nbrs, key=lambda v: probs.get(v, 0.0)))
    return AgentTrace(g.env_id, start, tuple(visited), STOP_BUDGET)


# -- templated speaker ----------------------------------------------------


def _distinguishing_subset(target_labels: tuple[str, ...],
                           competitor_labels: list[frozenset[str]]) -> tuple[str, ...] | None:
    """Greedy minimal token subset no competitor label set contains.

    Returns None when even the full label set fails (some competitor is a
    superset of the target's labels).
    """
    remaining = [labels for labels in competitor_labels]
    chosen: list[str] = []
    pool = sorted(set(target_labels))
    while remaining:
        best_tok, best_removed = None, 0
        for tok in pool:
            if tok in chosen:
                continue
            removed = sum(1 for labels in remaining if tok not in labels)
            if removed > best_removed:
                best_tok, best_removed = tok, removed
        if best_tok is None:
            return None
        chosen.append(best_tok)
        remaining = [labels for labels in remaining if best_tok in labels]
    return tuple(sorted(chosen))


def generate_instruction(g: EnvironmentGraph, path: PathSample | tuple[str, ...]) -> Instruction:
    """One directive per hop: the smallest label subset of the next node that
    distinguishes it from the other neighbors of the current node.

    If no subset distinguishes (two neighbors share identical-or-superset
    labels), the directive is the target's full label set plus an AMBIG
    marker. Requires labeled nodes, i.e. synthetic environments.
    """
    node_seq = path.path if isinstance(path, PathSample) else tuple(path)
    steps = []
    for cur, target in zip(node_seq, node_seq[1:]):
        nbrs = g.neighbors(cur)
        if target not in nbrs:
            raise DataError(f"path step ({cur!r}, {target!r}) is not an edge of {g.env_id!r}")
        target_labels = g.viewpoint(target).labels
        if not target_labels:
            raise DataError(
                f"node {target!r} in {g.env_id!r} carries no labels; instruction "
                "generation needs labeled (synthetic) environments")
        competitors = [frozenset(g.viewpoint(v).labels) for v in nbrs if v != target]
        subset = _distinguishing_subset(target_labels, competitors)
        if subset is None:
            steps.append(tuple(sorted(set(target_labels))) + (AMBIG_TOKEN,))
        elif subset:
            steps.append(subset)
        else:
            # no competitors at all: emit one token so the directive is never empty
            steps.append((min(target_labels),))
    return Instruction(tuple(steps))


# -- instruction-conditioned agents ----------------------------------------


def _directive_tokens(directive: tuple[str, ...]) -> tuple[str, ...]:
    return tuple(t for t in directive if t != AMBIG_TOKEN)


def run_follower_agent(g: EnvironmentGraph, instr: Instruction,
                       start: str) -> AgentTrace:
    """Execute directives in order, moving to the neighbor whose labels
    contain every directive token (smallest id on ties); on no match the
    agent stays put for that step and the miss is recorded.
    """
    g.viewpoint(start)
    visited = [start]
    misses = []
    for i, directive in enumerate(instr.steps):
        tokens = set(_directive_tokens(directive))
        matches = [v for v in g.neighbors(visited[-1])
                   if tokens <= set(g.viewpoint(v).labels)]
        if matches:
            visited.append(matches[0])
        else:
            visited.append(visited[-1])
            misses.append(i)
    return AgentTrace(g.env_id, start, tuple(visited), STOP_ACTION, tuple(misses))


def run_blend_agent(g: EnvironmentGraph, mtm: TransitionMatrix, instr: Instruction,
                    start: str, blend_lambda: float) -> AgentTrace:
    """Score neighbors by lambda * prior + (1 - lambda) * label match.

    prior is the transition probability at the current node (uniform over
    neighbors when the node has no row); match is the fraction of directive
    tokens the neighbor's labels contain. Deterministic: argmax with
    lexicographic tie-break. lambda=1 reduces to greedy-prior behavior,
    lambda=0 to follower behavior wherever a match exists.
    """
    if not 0.0 <= blend_lambda <= 1.0:
        raise ConfigError(f"lambda must be within [0, 1], got {blend_lambda}")
    g.viewpoint(start)
    visited = [start]
    for directive in instr.steps:
        nbrs = g.neighbors(visited[-1])
        if not nbrs:
            return AgentTrace(g.env_id, start, tuple(visited), STOP_DEAD_END)
        probs = mtm.row_probs(visited[-1])
        uniform = 1.0 / len(nbrs)
        tokens = set(_directive_tokens(directive))
        best, best_score = None, -math.inf
        for v in nbrs:
            prior = probs.get(v, 0.0) if probs is not None else uniform
            match = (len(tokens & set(g.viewpoint(v).labels)) / len(tokens)
                     if tokens else 0.0)
            score = blend_lambda * prior + (1.0 - blend_lambda) * match
            if score > best_score:
                best, best_score = v, score
        visited.append(best)
    return AgentTrace(g.env_id, start, tuple(visited), STOP_ACTION)
