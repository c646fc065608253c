"""Reproducible experiment pipelines.

Three bundled experiments: prior-only navigation (greedy-vs-random agents
on transition priors), the skew-factor comparison between shortest-path
and random-walk sampling, and the seen/unseen generalization gap of a
prior/language blend agent under the two augmentation strategies.

Every randomized stage draws from a substream keyed by (seed, stage name,
environment, episode), so identical configs reproduce identical reports
and shared stages produce identical data across experiments. The
generalization experiment gives the blend agent each seen environment's
own pooled transition matrix, while unseen environments consult the
cross-environment pool of all seen counts: synthetic node ids act as
state-appearance identities, so the pooled matrix models habits that
transfer (and mislead) in environments never seen in training.
"""

from __future__ import annotations

import contextlib
import dataclasses
import json
import math
import sys
import warnings
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from navprior import __version__, kernels
from navprior.agents import (
    run_blend_agent,
    run_follower_agent,
    run_greedy_mtm_agent,
    run_random_agent,
    generate_instruction,
)
from navprior.dataset import (
    LengthDistribution,
    PathDataset,
    empirical_length_distribution,
    split_environments,
)
from navprior.envgraph import (
    DEFAULT_LABEL_VOCAB,
    EnvironmentGraph,
    SynthConfig,
    generate_synthetic_env,
    load_graph_dir,
)
from navprior.errors import ConfigError, SamplerSkippedWarning
from navprior.metrics import EvalResult, evaluate
from navprior.prioranalysis import (
    TransitionMatrix,
    build_mtm,
    build_skew_report,
    merge_mtms,
    skew_fractions,
    skew_histogram,
)
from navprior.rngutil import substream
from navprior.samplers import SamplerConfig, sample_dataset

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


@dataclass
class ExperimentConfig:
    """Flat experiment settings; every field has a TOML key of the same name."""

    seed: int = 7
    # environments: synthetic by default, or a directory of env JSON files.
    # Defaults give scan-like metric density: ~2 m edges, so the 3 m success
    # radius spans a goal's immediate neighborhood, and 4-6 hop episodes
    # cover ~10 m.
    env_dir: str | None = None
    n_envs: int = 12
    env_nodes: int = 70
    env_radius: float = 2.8
    env_extent: tuple[float, float, float] = (17.0, 17.0, 2.5)
    label_vocab: tuple[str, ...] = DEFAULT_LABEL_VOCAB
    labels_per_node: int = 2
    max_env_attempts: int = 20
    # seen/unseen split
    fraction_seen: float = 10.0 / 12.0
    # sampling
    samples_per_env: int = 200
    augment_per_env: int = 200
    eval_per_split: int = 100
    min_goal_distance: float = 3.0
    max_resample_attempts: int = 100
    # benchmark-style hop window for shortest-path sampling (None = unbounded)
    path_min_hops: int | None = 4
    path_max_hops: int | None = 6
    # fixed hop pmf for random walks; None derives it from the sampled
    # shortest-path data
    walk_length_pmf: dict[int, float] | None = None
    # agents
    agent_T: int = 5
    blend_lambda: float = 0.5
    # training-data pooling (original vs augmented counts)
    pool_weight_original: float = 1.0
    pool_weight_augmented: float = 1.0
    # metrics
    success_threshold: float = 3.0
    distance_mode: str = "geodesic"
    # skew analysis
    skew_threshold: float = 1.5
    histogram_bin_width: float = 0.25
    histogram_max_bin: float = 4.0
    # output
    out_dir: str | None = None

    def validate(self) -> None:
        if self.env_dir is None:
            if self.n_envs < 2:
                raise ConfigError(f"n_envs must be >= 2, got {self.n_envs}")
            self.synth_config().validate()
        if not 0.0 < self.fraction_seen < 1.0:
            raise ConfigError(f"fraction_seen must be in (0, 1), got {self.fraction_seen}")
        for name in ("samples_per_env", "augment_per_env", "eval_per_split",
                     "agent_T", "max_resample_attempts"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if not 0.0 <= self.blend_lambda <= 1.0:
            raise ConfigError(f"blend_lambda must be within [0, 1], got {self.blend_lambda}")
        if self.distance_mode not in ("geodesic", "euclidean"):
            raise ConfigError(f"unknown distance_mode {self.distance_mode!r}")
        if self.success_threshold < 0 or self.min_goal_distance < 0:
            raise ConfigError("distances must be >= 0")
        if self.pool_weight_original <= 0 or self.pool_weight_augmented <= 0:
            raise ConfigError("pool weights must be > 0")
        self.sampler_config("shortest")  # checks the hop window
        if self.walk_length_pmf is not None:
            LengthDistribution(self.walk_length_pmf)

    def synth_config(self) -> SynthConfig:
        return SynthConfig(
            n_nodes=self.env_nodes,
            radius=self.env_radius,
            extent=tuple(self.env_extent),
            label_vocab=tuple(self.label_vocab),
            labels_per_node=self.labels_per_node,
            max_attempts=self.max_env_attempts,
        )

    def sampler_config(self, strategy: str) -> SamplerConfig:
        bounded = strategy == "shortest"
        return SamplerConfig(strategy=strategy,
                             min_goal_distance=self.min_goal_distance,
                             max_resample_attempts=self.max_resample_attempts,
                             min_hops=self.path_min_hops if bounded else None,
                             max_hops=self.path_max_hops if bounded else None)

    def walk_dist(self, fallback_ds) -> LengthDistribution:
        """Hop distribution for random walks: the configured pmf, or the
        empirical distribution of the given shortest-path dataset."""
        if self.walk_length_pmf is not None:
            return LengthDistribution(self.walk_length_pmf)
        return empirical_length_distribution(fallback_ds)

    def to_json_obj(self) -> dict:
        obj = dataclasses.asdict(self)
        obj["env_extent"] = list(self.env_extent)
        obj["label_vocab"] = list(self.label_vocab)
        if self.walk_length_pmf is not None:
            obj["walk_length_pmf"] = {str(h): p for h, p in
                                      sorted(self.walk_length_pmf.items())}
        return obj

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config key(s): {unknown}")
        kwargs = dict(data)
        if "env_extent" in kwargs:
            kwargs["env_extent"] = tuple(float(x) for x in kwargs["env_extent"])
        if "label_vocab" in kwargs:
            kwargs["label_vocab"] = tuple(str(t) for t in kwargs["label_vocab"])
        if kwargs.get("walk_length_pmf") is not None:
            kwargs["walk_length_pmf"] = {int(h): float(p) for h, p in
                                         kwargs["walk_length_pmf"].items()}
        for hop_key in ("path_min_hops", "path_max_hops"):
            if kwargs.get(hop_key) == 0:  # TOML has no null; 0 means unbounded
                kwargs[hop_key] = None
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg

    @classmethod
    def from_toml(cls, path) -> "ExperimentConfig":
        return cls.from_toml_with_experiment(path)[0]

    @classmethod
    def from_toml_with_experiment(cls, path) -> tuple["ExperimentConfig", str | None]:
        """Parse a flat TOML config; 'experiment' selects a pipeline, the rest
        are ExperimentConfig fields."""
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"config file {path}: {exc}") from exc
        experiment = data.pop("experiment", None)
        return cls.from_dict(data), experiment


@dataclass
class ExperimentReport:
    """Everything one experiment produced, JSON-serializable."""

    experiment: str
    config: dict
    env_ids: tuple[str, ...]
    seen_envs: tuple[str, ...]
    unseen_envs: tuple[str, ...]
    results: dict  # condition -> split -> aggregate metric dict
    extras: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        overlap = set(self.seen_envs) & set(self.unseen_envs)
        if overlap:
            raise ConfigError(f"seen/unseen splits overlap: {sorted(overlap)}")

    def to_json_obj(self) -> dict:
        return {
            "experiment": self.experiment,
            "config": self.config,
            "env_ids": list(self.env_ids),
            "seen_envs": list(self.seen_envs),
            "unseen_envs": list(self.unseen_envs),
            "results": self.results,
            "extras": self.extras,
            "provenance": self.provenance,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), indent=2, sort_keys=True)


def _provenance(cfg: ExperimentConfig) -> dict:
    return {
        "toolkit_version": __version__,
        "kernel_backend": kernels.BACKEND,
        "seed": cfg.seed,
        "created": datetime.now(timezone.utc).isoformat(),
    }


def _empty_mtm(env_id: str) -> TransitionMatrix:
    return TransitionMatrix(env_id, {})


# -- shared pipeline stages -------------------------------------------------


def make_environments(cfg: ExperimentConfig) -> dict[str, EnvironmentGraph]:
    """Synthetic environments derived from (seed, env index), or a loaded dir."""
    if cfg.env_dir is not None:
        return load_graph_dir(cfg.env_dir)
    synth = cfg.synth_config()
    graphs = {}
    for i in range(cfg.n_envs):
        env_id = f"env{i:02d}"
        g = generate_synthetic_env(synth, substream(cfg.seed, "env", i), env_id)
        graphs[env_id] = g
    return graphs


def _split(cfg: ExperimentConfig, graphs) -> tuple[set[str], set[str]]:
    return split_environments(sorted(graphs), cfg.fraction_seen,
                              substream(cfg.seed, "split"))


def _sample(cfg: ExperimentConfig, graphs, n_per_env: int, strategy: str,
            tag: str, dist=None) -> PathDataset:
    return sample_dataset(graphs, n_per_env, cfg.sampler_config(strategy),
                          seed=cfg.seed, dist=dist, stream_tag=tag)


def _eval_episodes(cfg: ExperimentConfig, graphs: dict[str, EnvironmentGraph],
                   split_ids: set[str]) -> PathDataset:
    """Fresh shortest-path episodes for one split, eval_per_split in total."""
    split_graphs = [graphs[e] for e in sorted(split_ids)]
    quota = math.ceil(cfg.eval_per_split / len(split_graphs))
    ds = _sample(cfg, split_graphs, quota, "shortest", "eval")
    trimmed = tuple(sorted(ds.samples, key=lambda s: s.path_id))[: cfg.eval_per_split]
    return PathDataset(trimmed, split=ds.split)


def _run_eval(cfg: ExperimentConfig, graphs, eval_ds: PathDataset,
              run_one) -> EvalResult:
    """Roll out one agent over every episode and evaluate the traces."""
    traces = {}
    goals = {}
    for s in eval_ds.samples:
        traces[s.path_id] = run_one(graphs[s.env_id], s)
        goals[s.path_id] = s.path[-1]
    return evaluate(graphs, traces, goals, threshold=cfg.success_threshold,
                    mode=cfg.distance_mode)


def _rollout_rng(cfg: ExperimentConfig, agent: str, env_id: str, path_id: int):
    return substream(cfg.seed, "rollout", agent, env_id, path_id)


@contextlib.contextmanager
def _collect_skips(extras: dict):
    """Surface environment-skip warnings (and keep them) in the report."""
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", SamplerSkippedWarning)
        yield
    skips = sorted(str(w.message) for w in caught
                   if issubclass(w.category, SamplerSkippedWarning))
    if skips:
        extras["sampler_warnings"] = skips
    for w in caught:
        if not issubclass(w.category, SamplerSkippedWarning):
            warnings.warn_explicit(w.message, w.category, w.filename, w.lineno)


def _write(out_dir: str | None, name: str, text: str) -> None:
    if out_dir is None:
        return
    path = Path(out_dir)
    path.mkdir(parents=True, exist_ok=True)
    (path / name).write_text(text)


# -- experiment 1: prior-only navigation -------------------------------------


def run_prior_only_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """Greedy-over-prior vs uniform-random agents on seen and unseen splits.

    Transition matrices are estimated from shortest-path training data on
    the seen environments; unseen environments have no training data, so
    the greedy agent falls back to uniform random steps there.
    """
    cfg.validate()
    extras: dict = {}
    results: dict[str, dict[str, dict]] = {"greedy_mtm": {}, "random": {}}
    with _collect_skips(extras):
        graphs = make_environments(cfg)
        seen, unseen = _split(cfg, graphs)
        train = _sample(cfg, [graphs[e] for e in sorted(seen)],
                        cfg.samples_per_env, "shortest", "train")
        mtms = {e: build_mtm(train, graphs[e]) for e in sorted(seen)}

        for split_name, ids in (("seen", seen), ("unseen", unseen)):
            eval_ds = _eval_episodes(cfg, graphs, ids)

            def run_greedy(g, s):
                mtm = mtms.get(g.env_id) or _empty_mtm(g.env_id)
                return run_greedy_mtm_agent(
                    g, mtm, s.path[0], cfg.agent_T,
                    rng=_rollout_rng(cfg, "greedy", g.env_id, s.path_id))

            def run_random(g, s):
                return run_random_agent(
                    g, s.path[0], cfg.agent_T,
                    rng=_rollout_rng(cfg, "random", g.env_id, s.path_id))

            results["greedy_mtm"][split_name] = _run_eval(cfg, graphs, eval_ds,
                                                          run_greedy).aggregate
            results["random"][split_name] = _run_eval(cfg, graphs, eval_ds,
                                                      run_random).aggregate

    extras.update({
        "sr_ratio_seen": (results["greedy_mtm"]["seen"]["sr"]
                          / results["random"]["seen"]["sr"])
        if results["random"]["seen"]["sr"] > 0 else None,
        "sr_diff_unseen": (results["greedy_mtm"]["unseen"]["sr"]
                           - results["random"]["unseen"]["sr"]),
    })
    report = ExperimentReport(
        experiment="prior_only",
        config=cfg.to_json_obj(),
        env_ids=tuple(sorted(graphs)),
        seen_envs=tuple(sorted(seen)),
        unseen_envs=tuple(sorted(unseen)),
        results=results,
        extras=extras,
        provenance=_provenance(cfg),
    )
    _write(cfg.out_dir, "prior_only_report.json", report.to_json())
    _write(cfg.out_dir, "prior_only_results.csv", _results_csv(report))
    return report


# -- experiment 2: skew comparison -------------------------------------------


def run_skew_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """Equal-size shortest vs random-walk datasets; per-node skew factors."""
    cfg.validate()
    extras: dict = {}
    results: dict[str, dict] = {}
    histograms = {}
    with _collect_skips(extras):
        graphs = make_environments(cfg)
        all_graphs = [graphs[e] for e in sorted(graphs)]
        shortest_ds = _sample(cfg, all_graphs, cfg.samples_per_env, "shortest",
                              "skew-shortest")
        dist = cfg.walk_dist(shortest_ds)
        walk_ds = _sample(cfg, all_graphs, cfg.samples_per_env, "random_walk",
                          "skew-walk", dist=dist)

        for condition, ds in (("shortest", shortest_ds), ("random_walk", walk_ds)):
            reports = [build_skew_report(build_mtm(ds, g), g, cfg.skew_threshold)
                       for g in all_graphs]
            results[condition] = {"skew": skew_fractions(reports,
                                                         low=cfg.skew_threshold,
                                                         high=2.0)}
            histograms[condition] = skew_histogram(reports, cfg.histogram_bin_width,
                                                   cfg.histogram_max_bin)

    extras.update({
        "length_pmf": {str(h): p for h, p in dist.pmf.items()},
        "histogram": {cond: {"bin_edges": list(h.bin_edges),
                             "counts": list(h.counts),
                             "none_count": h.none_count}
                      for cond, h in histograms.items()},
    })
    report = ExperimentReport(
        experiment="skew",
        config=cfg.to_json_obj(),
        env_ids=tuple(sorted(graphs)),
        seen_envs=tuple(sorted(graphs)),  # no split: every env contributes
        unseen_envs=(),
        results=results,
        extras=extras,
        provenance=_provenance(cfg),
    )
    _write(cfg.out_dir, "skew_report.json", report.to_json())
    for cond, hist in histograms.items():
        _write(cfg.out_dir, f"skew_histogram_{cond}.csv", hist.to_csv())
    return report


# -- experiment 3: generalization gap ----------------------------------------

GENERALIZATION_CONDITIONS = ("blend_shortest_aug", "blend_walk_aug",
                             "follower", "prior_only")


def run_generalization_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """Seen/unseen metric table for blend agents under both augmentations.

    Conditions: the blend agent with transition counts pooled from original
    plus shortest-path augmentation, the same agent with random-walk
    augmentation, the pure follower, and the pure prior (greedy) agent.
    Evaluation episodes are always fresh shortest paths, annotated by the
    templated speaker.
    """
    cfg.validate()
    extras: dict = {}
    results: dict[str, dict[str, dict]] = {c: {} for c in GENERALIZATION_CONDITIONS}
    with _collect_skips(extras):
        graphs = make_environments(cfg)
        seen, unseen = _split(cfg, graphs)
        seen_graphs = [graphs[e] for e in sorted(seen)]

        original = _sample(cfg, seen_graphs, cfg.samples_per_env, "shortest", "train")
        dist = cfg.walk_dist(original)
        aug_shortest = _sample(cfg, seen_graphs, cfg.augment_per_env, "shortest",
                               "aug-shortest")
        aug_walk = _sample(cfg, seen_graphs, cfg.augment_per_env, "random_walk",
                           "aug-walk", dist=dist)

        weights = [cfg.pool_weight_original, cfg.pool_weight_augmented]
        mtm_original = {e: build_mtm(original, graphs[e]) for e in sorted(seen)}
        pools = {}
        habits = {}
        for condition, aug_ds in (("blend_shortest_aug", aug_shortest),
                                  ("blend_walk_aug", aug_walk)):
            per_env = {
                e: merge_mtms([mtm_original[e], build_mtm(aug_ds, graphs[e])],
                              env_id=e, weights=weights)
                for e in sorted(seen)
            }
            pools[condition] = per_env
            habits[condition] = merge_mtms(per_env.values(), env_id="pooled")

        for split_name, ids in (("seen", seen), ("unseen", unseen)):
            eval_ds = _eval_episodes(cfg, graphs, ids)
            instructions = {s.path_id: generate_instruction(graphs[s.env_id], s)
                            for s in eval_ds.samples}

            def run_blend_for(condition):
                def run_one(g, s):
                    mtm = (pools[condition][g.env_id] if g.env_id in seen
                           else habits[condition])
                    return run_blend_agent(g, mtm, instructions[s.path_id],
                                           s.path[0], cfg.blend_lambda)
                return run_one

            def run_follower(g, s):
                return run_follower_agent(g, instructions[s.path_id], s.path[0])

            def run_prior(g, s):
                mtm = mtm_original.get(g.env_id) or _empty_mtm(g.env_id)
                return run_greedy_mtm_agent(
                    g, mtm, s.path[0], cfg.agent_T,
                    rng=_rollout_rng(cfg, "greedy", g.env_id, s.path_id))

            runners = {
                "blend_shortest_aug": run_blend_for("blend_shortest_aug"),
                "blend_walk_aug": run_blend_for("blend_walk_aug"),
                "follower": run_follower,
                "prior_only": run_prior,
            }
            for condition, run_one in runners.items():
                results[condition][split_name] = _run_eval(cfg, graphs, eval_ds,
                                                           run_one).aggregate

    extras.update({
        "sr_gap": {c: results[c]["seen"]["sr"] - results[c]["unseen"]["sr"]
                   for c in GENERALIZATION_CONDITIONS},
        "augmentation": {
            "blend_shortest_aug": "shortest",
            "blend_walk_aug": "random_walk",
            "follower": "none",
            "prior_only": "none",
        },
    })
    report = ExperimentReport(
        experiment="generalization",
        config=cfg.to_json_obj(),
        env_ids=tuple(sorted(graphs)),
        seen_envs=tuple(sorted(seen)),
        unseen_envs=tuple(sorted(unseen)),
        results=results,
        extras=extras,
        provenance=_provenance(cfg),
    )
    _write(cfg.out_dir, "generalization_report.json", report.to_json())
    _write(cfg.out_dir, "generalization_table.csv", _results_csv(report))
    return report


# -- report export ------------------------------------------------------------

_METRIC_COLUMNS = ("ne", "sr", "osr", "spl")


def _results_csv(report: ExperimentReport) -> str:
    """One row per condition: NE/SR/OSR/SPL for seen then unseen splits."""
    header = ["condition", "augmentation"]
    for split_name in ("seen", "unseen"):
        header += [f"{m}_{split_name}" for m in _METRIC_COLUMNS]
    lines = [",".join(header)]
    augmentations = report.extras.get("augmentation", {})
    for condition in report.results:
        row = [condition, augmentations.get(condition, "")]
        for split_name in ("seen", "unseen"):
            agg = report.results[condition].get(split_name)
            for m in _METRIC_COLUMNS:
                if agg is None:
                    row.append("")
                elif m in ("sr", "osr"):
                    row.append(repr(100.0 * agg[m]))
                else:
                    row.append(repr(agg[m]))
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


EXPERIMENTS = {
    "prior-only": run_prior_only_experiment,
    "skew": run_skew_experiment,
    "generalization": run_generalization_experiment,
}


def run_demo(out_dir: str, seed: int = 7) -> dict[str, ExperimentReport]:
    """Run all three bundled experiments with default desk-scale settings."""
    reports = {}
    for name, runner in EXPERIMENTS.items():
        sub = str(Path(out_dir) / name.replace("-", "_"))
        cfg = demo_config(name, seed=seed, out_dir=sub)
        reports[name] = runner(cfg)
    return reports


def demo_config(experiment: str, seed: int = 7,
                out_dir: str | None = None) -> ExperimentConfig:
    """Bundled per-experiment defaults, sized for sub-minute desk runs."""
    if experiment == "skew":
        # Small dense worlds so 200 samples give every node enough visits
        # for its empirical row to concentrate; walks use the benchmark-like
        # 4-5 hop profile.
        return ExperimentConfig(
            seed=seed,
            n_envs=12,
            env_nodes=8,
            env_radius=7.0,
            env_extent=(13.0, 13.0, 3.0),
            max_env_attempts=50,
            samples_per_env=200,
            path_min_hops=None,
            path_max_hops=None,
            walk_length_pmf={4: 0.5, 5: 0.5},
            out_dir=out_dir,
        )
    if experiment == "generalization":
        # Two training environments keep the pooled cross-env habit matrix
        # concentrated; six held-out environments with a large episode count
        # make the unseen-split comparison statistically crisp. The tiny
        # four-token vocabulary leaves instructions ambiguous often enough
        # that priors have something to resolve.
        return ExperimentConfig(
            seed=seed,
            n_envs=8,
            labels_per_node=2,
            label_vocab=DEFAULT_LABEL_VOCAB[:4],
            fraction_seen=0.25,
            samples_per_env=40,
            augment_per_env=300,
            eval_per_split=320,
            blend_lambda=0.55,
            out_dir=out_dir,
        )
    return ExperimentConfig(seed=seed, out_dir=out_dir)
