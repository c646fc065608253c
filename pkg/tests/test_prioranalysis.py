from __future__ import annotations

import pytest

from navprior.dataset import LengthDistribution, PathDataset, PathSample
from navprior.envgraph import EnvironmentGraph
from navprior.errors import ConfigError, DataError
from navprior.prioranalysis import (
    Histogram,
    TransitionMatrix,
    build_mtm,
    build_skew_report,
    load_mtms,
    merge_mtms,
    save_mtms,
    skew_factor,
    skew_fractions,
    skew_histogram,
)
from navprior.samplers import SamplerConfig, sample_dataset

from .conftest import line_graph, random_env, vp


def star_graph():
    """Center S with leaves B, C, D, E (degree 4)."""
    nodes = [vp("S"), vp("B", 1), vp("C", 0, 1), vp("D", -1), vp("E", 0, -1)]
    return EnvironmentGraph("star", nodes,
                            [("S", "B"), ("S", "C"), ("S", "D"), ("S", "E")])


def ds(env_id, *paths):
    return PathDataset(tuple(
        PathSample(i, env_id, tuple(p)) for i, p in enumerate(paths)))


class TestBuildMtm:
    def test_single_path_rows(self):
        g = line_graph(ids=("A", "B", "C"))
        mtm = build_mtm(ds("line", "ABC"), g)
        assert mtm.row_probs("A") == {"B": 1.0}
        assert mtm.row_probs("B") == {"C": 1.0}
        assert "C" not in mtm

    def test_count_normalization(self):
        g = star_graph()
        mtm = build_mtm(ds("star", "SB", "SB", "SC"), g)
        probs = mtm.row_probs("S")
        assert probs["B"] == pytest.approx(2 / 3, abs=1e-12)
        assert probs["C"] == pytest.approx(1 / 3, abs=1e-12)

    def test_hand_tally_on_four_node_graph(self):
        # square A-B-C-D-A; paths ABC, CBA, ADC give directed counts
        # A: {B:1, D:1}; B: {C:1, A:1}; C: {B:1}; D: {C:1}
        nodes = [vp("A"), vp("B", 1), vp("C", 1, 1), vp("D", 0, 1)]
        g = EnvironmentGraph("sq", nodes,
                             [("A", "B"), ("B", "C"), ("C", "D"), ("A", "D")])
        mtm = build_mtm(ds("sq", "ABC", "CBA", "ADC"), g)
        assert mtm.row_counts("A") == {"B": 1, "D": 1}
        assert mtm.row_counts("B") == {"C": 1, "A": 1}
        assert mtm.row_counts("C") == {"B": 1}
        assert mtm.row_counts("D") == {"C": 1}

    def test_other_env_samples_ignored(self):
        g = line_graph(ids=("A", "B", "C"))
        mixed = PathDataset((PathSample(0, "line", ("A", "B")),
                             PathSample(1, "other", ("X", "Y"))))
        mtm = build_mtm(mixed, g)
        assert mtm.visited_nodes() == ("A",)

    def test_non_edge_transition_rejected(self):
        g = line_graph(ids=("A", "B", "C"))
        with pytest.raises(DataError, match="not an edge"):
            build_mtm(ds("line", "AC"), g)

    def test_row_stochastic_fuzz(self):
        dist = LengthDistribution({3: 0.5, 4: 0.5})
        for seed in range(30):
            g = random_env(seed + 40, n_nodes=25)
            sampled = sample_dataset([g], 20, SamplerConfig(strategy="random_walk"),
                                     seed=seed, dist=dist)
            mtm = build_mtm(sampled, g)
            assert mtm.visited_nodes()
            for node in mtm.visited_nodes():
                assert abs(sum(mtm.row_probs(node).values()) - 1.0) <= 1e-9

    def test_count_additivity_fuzz(self):
        dist = LengthDistribution({3: 0.5, 4: 0.5})
        cfg = SamplerConfig(strategy="random_walk")
        for seed in range(20):
            g = random_env(seed + 70, n_nodes=25)
            d1 = sample_dataset([g], 12, cfg, seed=seed, dist=dist)
            d2 = sample_dataset([g], 12, cfg, seed=seed + 1000, dist=dist)
            m1, m2 = build_mtm(d1, g), build_mtm(d2, g)
            union = PathDataset(
                tuple(d1.samples)
                + tuple(PathSample(s.path_id + 10_000, s.env_id, s.path)
                        for s in d2.samples))
            m_union = build_mtm(union, g)
            merged = merge_mtms([m1, m2], env_id=g.env_id)
            assert m_union.rows == merged.rows


class TestSkewFactor:
    def test_degree_two_ratio(self):
        g = line_graph(ids=("A", "B", "C"))
        mtm = TransitionMatrix("line", {"B": {"A": 3, "C": 1}})
        assert skew_factor(mtm, g, "B") == pytest.approx(1.5, abs=1e-12)

    def test_degree_four_single_successor(self):
        g = star_graph()
        mtm = TransitionMatrix("star", {"S": {"B": 5}})
        assert skew_factor(mtm, g, "S") == pytest.approx(4.0, abs=1e-12)

    def test_unvisited_is_absent(self):
        g = star_graph()
        mtm = TransitionMatrix("star", {})
        assert skew_factor(mtm, g, "S") is None

    def test_row_on_degree_zero_node_is_inconsistent(self):
        g = EnvironmentGraph("e", [vp("A"), vp("B", 9)], [])
        mtm = TransitionMatrix("e", {"A": {"B": 1}})
        with pytest.raises(DataError):
            skew_factor(mtm, g, "A")

    def test_uniform_rows_give_skew_one(self):
        g = star_graph()
        mtm = TransitionMatrix("star", {"S": {"B": 2, "C": 2, "D": 2, "E": 2}})
        assert skew_factor(mtm, g, "S") == pytest.approx(1.0, abs=1e-12)

    def test_skew_at_least_one_fuzz(self):
        dist = LengthDistribution({3: 0.5, 4: 0.5})
        for seed in range(15):
            g = random_env(seed + 200, n_nodes=25)
            sampled = sample_dataset([g], 15, SamplerConfig(strategy="random_walk"),
                                     seed=seed, dist=dist)
            mtm = build_mtm(sampled, g)
            report = build_skew_report(mtm, g)
            for value in report.visited_skews():
                assert value >= 1.0 - 1e-9


class TestHistogram:
    def _report(self, skews, n_absent=0):
        per_node = {f"n{i}": s for i, s in enumerate(skews)}
        for j in range(n_absent):
            per_node[f"absent{j}"] = None
        return build_report_like(per_node)

    def test_spec_example_bins(self):
        reports = [fake_report({"a": 1.0, "b": 1.2, "c": 4.0})]
        hist = skew_histogram(reports, bin_width=0.5, max_bin=3.0)
        assert hist.bin_edges == (1.0, 1.5, 2.0, 2.5, 3.0)
        assert hist.counts[0] == 2
        assert hist.counts[-1] == 1
        assert sum(hist.counts) == 3

    def test_all_absent(self):
        reports = [fake_report({"a": None, "b": None})]
        hist = skew_histogram(reports, bin_width=0.5, max_bin=3.0)
        assert sum(hist.counts) == 0
        assert hist.none_count == 2

    def test_boundary_values(self):
        reports = [fake_report({"a": 1.0, "b": 1.5, "c": 2.9999, "d": 3.0})]
        hist = skew_histogram(reports, bin_width=0.5, max_bin=3.0)
        assert hist.counts == (1, 1, 0, 1, 1)

    def test_bad_config(self):
        with pytest.raises(ConfigError):
            skew_histogram([], bin_width=0.0, max_bin=3.0)

    def test_csv_shape(self):
        hist = Histogram((1.0, 1.5, 2.0), (3, 1, 2), 4)
        lines = hist.to_csv().strip().splitlines()
        assert lines[0] == "bin_lo,bin_hi,count"
        assert lines[1].startswith("1.0,1.5,3")
        assert lines[-2].endswith("inf,2")
        assert lines[-1] == "none,,4"

    def test_directional_shortest_vs_walk(self):
        graphs = [random_env(i + 300, n_nodes=10, radius=7.0,
                             extent=(13.0, 13.0, 3.0), env_id=f"env{i}")
                  for i in range(4)]
        shortest = sample_dataset(graphs, 150, SamplerConfig(strategy="shortest"),
                                  seed=0, stream_tag="s")
        dist = LengthDistribution({4: 0.5, 5: 0.5})
        walks = sample_dataset(graphs, 150, SamplerConfig(strategy="random_walk"),
                               seed=0, dist=dist, stream_tag="w")
        fractions = {}
        for name, sampled in (("shortest", shortest), ("walk", walks)):
            reports = [build_skew_report(build_mtm(sampled, g), g) for g in graphs]
            fractions[name] = skew_fractions(reports)
        assert (fractions["walk"]["fraction_at_most_low"]
                > fractions["shortest"]["fraction_at_most_low"])
        assert (fractions["shortest"]["fraction_at_least_high"]
                > fractions["walk"]["fraction_at_least_high"])


class TestSerialization:
    def test_mtm_json_roundtrip_recomputes_probs(self):
        g = star_graph()
        mtm = build_mtm(ds("star", "SB", "SB", "SC"), g)
        loaded = load_mtms(save_mtms([mtm]))
        assert set(loaded) == {"star"}
        assert loaded["star"].rows == mtm.rows
        assert loaded["star"].row_probs("S") == mtm.row_probs("S")

    def test_merge_weights(self):
        m1 = TransitionMatrix("e", {"A": {"B": 2}})
        m2 = TransitionMatrix("e", {"A": {"B": 1, "C": 1}})
        merged = merge_mtms([m1, m2], env_id="e", weights=[1.0, 3.0])
        assert merged.row_counts("A") == {"B": 5.0, "C": 3.0}

    def test_merge_rejects_bad_weights(self):
        m = TransitionMatrix("e", {"A": {"B": 1}})
        with pytest.raises(ConfigError):
            merge_mtms([m], weights=[1.0, 2.0])


def fake_report(per_node):
    from navprior.prioranalysis import SkewReport

    visited = [value for value in per_node.values() if value is not None]
    fraction = (sum(1 for value in visited if value <= 1.5) / len(visited)
                if visited else None)
    return SkewReport("fake", dict(per_node), 1.5, fraction)


def build_report_like(per_node):
    return fake_report(per_node)
