from __future__ import annotations

import math

import numpy as np
import pytest

from navprior.agents import AgentTrace, STOP_ACTION, run_random_agent
from navprior.envgraph import EnvironmentGraph
from navprior.errors import ConfigError, DataError
from navprior.metrics import (
    eval_result_to_csv,
    evaluate,
    navigation_error,
    oracle_success,
    spl,
    success,
    trace_length,
)

from .conftest import line_graph, random_env, vp
from .oracles import bellman_ford


def tr(g, *nodes):
    return AgentTrace(g.env_id, nodes[0], tuple(nodes), STOP_ACTION)


class TestNavigationError:
    def test_at_goal(self, line):
        assert navigation_error(line, tr(line, "A", "B", "C"), "C") == 0.0

    def test_chain_distance(self):
        g = line_graph(spacing=1.0, ids=("A", "B", "C"))
        assert navigation_error(g, tr(g, "A"), "C") == 2.0

    def test_unreachable_is_inf(self):
        g = EnvironmentGraph("e", [vp("A"), vp("B", 40)], [])
        assert navigation_error(g, tr(g, "A"), "B") == math.inf

    def test_euclidean_mode(self):
        g = line_graph(spacing=2.0)
        trace = tr(g, "A")
        assert navigation_error(g, trace, "E", mode="euclidean") == 8.0
        with pytest.raises(ConfigError):
            navigation_error(g, trace, "E", mode="manhattan")

    def test_matches_bellman_ford_on_random_traces(self):
        g = random_env(17, n_nodes=30)
        idx = {nid: i for i, nid in enumerate(g.node_ids)}
        edges = [(idx[a], idx[b], g.euclidean(a, b)) for a, b in sorted(g.edges)]
        rng = np.random.default_rng(3)
        for k in range(50):
            start = g.node_ids[int(rng.random() * g.n_nodes)]
            goal = g.node_ids[int(rng.random() * g.n_nodes)]
            trace = run_random_agent(g, start, 6, rng)
            oracle = bellman_ford(g.n_nodes, edges, idx[goal])
            assert navigation_error(g, trace, goal) == oracle[idx[trace.visited[-1]]]


class TestSuccess:
    def test_zero(self):
        assert success(0.0)

    def test_boundary_inclusive(self):
        assert success(3.0)

    def test_just_outside(self):
        assert not success(3.01)


class TestOracleSuccess:
    def test_passes_through_goal(self, line):
        trace = tr(line, "A", "B", "C", "D", "E")
        assert navigation_error(line, trace, "C") == 4.0
        assert not success(navigation_error(line, trace, "C"))
        assert oracle_success(line, trace, "C")

    def test_never_close(self, line):
        assert not oracle_success(line, tr(line, "A"), "E")

    def test_dominates_success(self):
        g = random_env(23, n_nodes=25)
        rng = np.random.default_rng(1)
        for _ in range(100):
            start = g.node_ids[int(rng.random() * g.n_nodes)]
            goal = g.node_ids[int(rng.random() * g.n_nodes)]
            trace = run_random_agent(g, start, 5, rng)
            ne = navigation_error(g, trace, goal)
            if success(ne):
                assert oracle_success(g, trace, goal)


class TestSpl:
    def test_perfect(self):
        assert spl(True, 4.0, 4.0) == 1.0

    def test_failure_is_zero(self):
        assert spl(False, 4.0, 4.0) == 0.0

    def test_detour_halves(self):
        assert spl(True, 4.0, 8.0) == 0.5

    def test_no_movement_success(self):
        assert spl(True, 0.0, 0.0) == 1.0

    def test_shortcut_capped_at_one(self):
        assert spl(True, 4.0, 2.0) == 1.0


class TestTraceLength:
    def test_sums_edges(self, line):
        assert trace_length(line, tr(line, "A", "B", "C")) == 4.0

    def test_stay_steps_cost_zero(self, line):
        assert trace_length(line, tr(line, "A", "A", "B", "B", "C")) == 4.0


GOLDEN = [
    # (path_id, trace nodes, goal, ne, success, oracle, spl, length, optimal)
    (1, ("A", "B", "C"), "C", 0.0, 1, 1, 1.0, 4.0, 4.0),
    (2, ("A", "B", "C", "D"), "C", 2.0, 1, 1, 0.6666666666666666, 6.0, 4.0),
    (3, ("A", "B"), "E", 6.0, 0, 0, 0.0, 2.0, 8.0),
    (4, ("A", "B", "C", "D", "E"), "C", 4.0, 0, 1, 0.0, 8.0, 4.0),
    (5, ("A",), "B", 2.0, 1, 1, 1.0, 0.0, 2.0),
]


class TestEvaluateGolden:
    def _run(self):
        g = line_graph(spacing=2.0)
        traces = {pid: tr(g, *nodes) for pid, nodes, *_ in GOLDEN}
        goals = {pid: goal for pid, _, goal, *_ in GOLDEN}
        return evaluate({"line": g}, traces, goals)

    def test_per_episode_exact(self):
        result = self._run()
        assert len(result.per_episode) == 5
        for episode, (pid, _, _, ne, ok, oracle, s, length, optimal) in zip(
                result.per_episode, GOLDEN):
            assert episode.path_id == pid
            assert abs(episode.ne - ne) < 1e-9
            assert episode.success == bool(ok)
            assert episode.oracle_success == bool(oracle)
            assert abs(episode.spl - s) < 1e-9
            assert abs(episode.trace_length - length) < 1e-9
            assert abs(episode.geodesic_optimal - optimal) < 1e-9

    def test_aggregates_exact(self):
        agg = self._run().aggregate
        assert abs(agg["ne"] - 2.8) < 1e-9
        assert abs(agg["sr"] - 0.6) < 1e-9
        assert abs(agg["osr"] - 0.8) < 1e-9
        assert abs(agg["spl"] - 0.5333333333333333) < 1e-9
        assert abs(agg["trace_length"] - 4.0) < 1e-9
        assert abs(agg["geodesic_optimal"] - 4.4) < 1e-9

    def test_csv_export(self):
        text = eval_result_to_csv(self._run())
        lines = text.strip().splitlines()
        assert lines[0] == "path_id,env_id,ne,success,oracle_success,spl,trace_len,optimal_len"
        assert len(lines) == 7
        agg = lines[-1].split(",")
        assert agg[0] == "AGGREGATE"
        assert float(agg[3]) == pytest.approx(60.0)  # SR as a percentage
        assert float(agg[4]) == pytest.approx(80.0)


class TestEvaluateContracts:
    def test_missing_goal_names_episode(self, line):
        traces = {9: tr(line, "A", "B")}
        with pytest.raises(DataError, match="9"):
            evaluate({"line": line}, traces, {})

    def test_missing_environment(self, line):
        traces = {1: AgentTrace("ghost", "A", ("A",), STOP_ACTION)}
        with pytest.raises(DataError, match="ghost"):
            evaluate({"line": line}, traces, {1: "A"})

    def test_single_perfect_episode(self, line):
        result = evaluate({"line": line}, {1: tr(line, "A", "B", "C")}, {1: "C"})
        agg = result.aggregate
        assert agg["sr"] == 1.0 and agg["osr"] == 1.0
        assert agg["spl"] == 1.0 and agg["ne"] == 0.0

    def test_mixed_pair(self, line):
        traces = {1: tr(line, "A", "B", "C"), 2: tr(line, "A")}
        result = evaluate({"line": line}, traces, {1: "C", 2: "E"})
        assert result.aggregate["sr"] == 0.5
        assert result.aggregate["spl"] == 0.5

    def test_invariants_fuzz(self):
        for seed in range(10):
            g = random_env(seed + 60, n_nodes=25)
            rng = np.random.default_rng(seed)
            traces, goals = {}, {}
            for pid in range(100):
                start = g.node_ids[int(rng.random() * g.n_nodes)]
                goals[pid] = g.node_ids[int(rng.random() * g.n_nodes)]
                traces[pid] = run_random_agent(g, start, int(rng.integers(0, 8)), rng)
            result = evaluate({g.env_id: g}, traces, goals)
            for e in result.per_episode:
                assert 0.0 <= e.spl <= 1.0
                assert e.spl == 0.0 or e.success
                assert e.oracle_success >= e.success
                if e.ne == 0.0:
                    assert e.success
            assert result.aggregate["osr"] >= result.aggregate["sr"]
