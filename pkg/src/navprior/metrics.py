"""Episode evaluation: navigation error, success, oracle success, SPL.

NE and oracle success use geodesic (graph) distance by default; a mode
switch selects straight-line distance instead. The SPL optimal length is
always the geodesic start-to-goal distance, and traversed length sums the
straight-line lengths of the edges actually walked (repeated nodes, i.e.
no-movement steps, contribute zero).
"""

from __future__ import annotations

from dataclasses import dataclass

from navprior.agents import AgentTrace
from navprior.envgraph import EnvironmentGraph
from navprior.errors import ConfigError, DataError

DEFAULT_SUCCESS_RADIUS = 3.0
DISTANCE_MODES = ("geodesic", "euclidean")


def _goal_distances(g: EnvironmentGraph, goal: str, mode: str):
    """Distance from every node to the goal, as a lookup by node id."""
    if mode == "geodesic":
        dist = g.distances_from(goal)
        return lambda nid: float(dist[g.index_of(nid)])
    if mode == "euclidean":
        return lambda nid: g.euclidean(nid, goal)
    raise ConfigError(f"unknown distance mode {mode!r}, expected {DISTANCE_MODES}")


def navigation_error(g: EnvironmentGraph, trace: AgentTrace, goal: str,
                     mode: str = "geodesic") -> float:
    """Distance from the agent's final node to the goal; inf if unreachable."""
    return _goal_distances(g, goal, mode)(trace.visited[-1])


def success(ne: float, threshold: float = DEFAULT_SUCCESS_RADIUS) -> bool:
    """Within the success radius, boundary inclusive."""
    return ne <= threshold


def oracle_success(g: EnvironmentGraph, trace: AgentTrace, goal: str,
                   threshold: float = DEFAULT_SUCCESS_RADIUS,
                   mode: str = "geodesic") -> bool:
    """True iff any visited node comes within the success radius of the goal."""
    to_goal = _goal_distances(g, goal, mode)
    return min(to_goal(nid) for nid in trace.visited) <= threshold


def spl(succeeded: bool, geodesic_optimal: float, trace_length: float) -> float:
    """Success weighted by path length: optimal / max(optimal, traversed)."""
    if not succeeded:
        return 0.0
    if geodesic_optimal == 0.0 and trace_length == 0.0:
        return 1.0
    return geodesic_optimal / max(geodesic_optimal, trace_length)


def trace_length(g: EnvironmentGraph, trace: AgentTrace) -> float:
    """Straight-line length of the walked sequence, repeated nodes cost 0."""
    return sum(g.euclidean(u, v) for u, v in zip(trace.visited, trace.visited[1:]))


@dataclass(frozen=True)
class EpisodeEval:
    path_id: int
    env_id: str
    ne: float
    success: bool
    oracle_success: bool
    spl: float
    trace_length: float
    geodesic_optimal: float


@dataclass(frozen=True)
class EvalResult:
    """Per-episode metrics plus arithmetic-mean aggregates (ratios, not %)."""

    per_episode: tuple[EpisodeEval, ...]
    aggregate: dict[str, float]


def evaluate(graphs: dict[str, EnvironmentGraph], traces: dict[int, AgentTrace],
             goals: dict[int, str], threshold: float = DEFAULT_SUCCESS_RADIUS,
             mode: str = "geodesic") -> EvalResult:
    """Evaluate one trace per episode against its goal node.

    Episodes are processed in path_id order; aggregates are plain means
    (success rates stay ratios internally and become percentages only in
    CSV export).
    """
    episodes = []
    for path_id in sorted(traces):
        trace = traces[path_id]
        if path_id not in goals:
            raise DataError(f"no goal given for episode {path_id}")
        goal = goals[path_id]
        g = graphs.get(trace.env_id)
        if g is None:
            raise DataError(f"episode {path_id}: environment {trace.env_id!r} not provided")
        ne = navigation_error(g, trace, goal, mode)
        ok = success(ne, threshold)
        optimal = g.geodesic_distance(trace.visited[0], goal)
        length = trace_length(g, trace)
        episodes.append(EpisodeEval(
            path_id=path_id,
            env_id=trace.env_id,
            ne=ne,
            success=ok,
            oracle_success=oracle_success(g, trace, goal, threshold, mode),
            spl=spl(ok, optimal, length),
            trace_length=length,
            geodesic_optimal=optimal,
        ))
    if not episodes:
        raise DataError("no episodes to evaluate")
    n = len(episodes)
    aggregate = {
        "episodes": float(n),
        "ne": sum(e.ne for e in episodes) / n,
        "sr": sum(e.success for e in episodes) / n,
        "osr": sum(e.oracle_success for e in episodes) / n,
        "spl": sum(e.spl for e in episodes) / n,
        "trace_length": sum(e.trace_length for e in episodes) / n,
        "geodesic_optimal": sum(e.geodesic_optimal for e in episodes) / n,
    }
    return EvalResult(tuple(episodes), aggregate)


def eval_result_to_csv(result: EvalResult) -> str:
    """Per-episode rows plus an AGGREGATE row (rates as percentages)."""
    lines = ["path_id,env_id,ne,success,oracle_success,spl,trace_len,optimal_len"]
    for e in result.per_episode:
        lines.append(f"{e.path_id},{e.env_id},{e.ne!r},{int(e.success)},"
                     f"{int(e.oracle_success)},{e.spl!r},{e.trace_length!r},"
                     f"{e.geodesic_optimal!r}")
    a = result.aggregate
    lines.append(f"AGGREGATE,,{a['ne']!r},{100.0 * a['sr']!r},{100.0 * a['osr']!r},"
                 f"{a['spl']!r},{a['trace_length']!r},{a['geodesic_optimal']!r}")
    return "\n".join(lines) + "\n"
