"""Path samplers: minimum-weight routes and constrained self-avoiding walks.

Both samplers reject endpoint pairs closer than the configured goal
distance, so datasets produced by either strategy differ only in path
shape. All randomness flows through explicit generators; batch sampling
derives one substream per environment so results are independent of
environment processing order.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from navprior import kernels
from navprior.dataset import LengthDistribution, PathDataset, PathSample
from navprior.envgraph import EnvironmentGraph
from navprior.errors import ConfigError, SamplerExhaustedError, SamplerSkippedWarning
from navprior.rngutil import key_entropy

STRATEGIES = ("shortest", "random_walk")


@dataclass(frozen=True)
class SamplerConfig:
    strategy: str = "random_walk"
    min_goal_distance: float = 3.0
    max_resample_attempts: int = 100
    # optional hop-count window for shortest paths (benchmark episodes are
    # a narrow hop band); random walks take their lengths from the given
    # distribution instead
    min_hops: int | None = None
    max_hops: int | None = None

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"unknown strategy {self.strategy!r}, expected {STRATEGIES}")
        if self.min_goal_distance < 0:
            raise ConfigError(f"min_goal_distance must be >= 0, got {self.min_goal_distance}")
        if self.max_resample_attempts < 1:
            raise ConfigError(
                f"max_resample_attempts must be >= 1, got {self.max_resample_attempts}")
        lo = 1 if self.min_hops is None else self.min_hops
        hi = self.max_hops
        if lo < 1 or (hi is not None and hi < lo):
            raise ConfigError(
                f"invalid hop window [{self.min_hops}, {self.max_hops}]")

    def hops_ok(self, hops: int) -> bool:
        if self.min_hops is not None and hops < self.min_hops:
            return False
        if self.max_hops is not None and hops > self.max_hops:
            return False
        return True


def _pick(u: float, n: int) -> int:
    j = int(u * n)
    return n - 1 if j >= n else j


def sample_shortest_path(g: EnvironmentGraph, cfg: SamplerConfig,
                         rng: np.random.Generator, path_id: int = 0) -> PathSample:
    """Uniform endpoints (subject to the goal-distance rule), minimum-weight path.

    Equal-weight ties are resolved by the deterministic neighbor ordering
    inside the shortest-path kernel.
    """
    if g.n_nodes < 2:
        raise SamplerExhaustedError(f"env {g.env_id!r} has fewer than 2 nodes")
    too_close = unreachable = bad_length = 0
    for attempt in range(cfg.max_resample_attempts):
        u = rng.random(2)
        start = g.node_ids[_pick(u[0], g.n_nodes)]
        goal = g.node_ids[_pick(u[1], g.n_nodes)]
        if start == goal or g.euclidean(start, goal) < cfg.min_goal_distance:
            too_close += 1
            continue
        path = g.shortest_path(start, goal)
        if path is None:
            unreachable += 1
            continue
        if not cfg.hops_ok(len(path) - 1):
            bad_length += 1
            continue
        return PathSample(path_id=path_id, env_id=g.env_id, path=tuple(path))
    raise SamplerExhaustedError(
        f"no valid shortest-path sample in env {g.env_id!r} after "
        f"{cfg.max_resample_attempts} attempts ({too_close} too close, "
        f"{unreachable} unreachable, {bad_length} outside the hop window)",
        attempts=cfg.max_resample_attempts, too_close=too_close, unreachable=unreachable)


def sample_random_walk(g: EnvironmentGraph, dist: LengthDistribution,
                       cfg: SamplerConfig, rng: np.random.Generator,
                       path_id: int = 0) -> PathSample:
    """Self-avoiding uniform walk with length drawn from ``dist``.

    Per attempt: uniform start, target hop-count h ~ dist, then h uniform
    steps over not-yet-visited neighbors. Attempts that dead-end before h
    hops or end closer than the goal-distance rule are discarded entirely,
    so accepted paths have exactly h+1 distinct nodes and the hop-count
    distribution is not truncated.
    """
    if g.n_nodes < 2:
        raise SamplerExhaustedError(f"env {g.env_id!r} has fewer than 2 nodes")
    dead_ends = too_close = 0
    for attempt in range(cfg.max_resample_attempts):
        u = rng.random(2)
        start_idx = _pick(u[0], g.n_nodes)
        hops = dist.sample(u[1])
        steps_u = rng.random(hops)
        walk = kernels.self_avoiding_walk(g._indptr, g._indices, start_idx,
                                          hops, steps_u)
        if walk is None:
            dead_ends += 1
            continue
        start, end = g.node_ids[int(walk[0])], g.node_ids[int(walk[-1])]
        if g.euclidean(start, end) < cfg.min_goal_distance:
            too_close += 1
            continue
        return PathSample(path_id=path_id, env_id=g.env_id,
                          path=tuple(g.node_ids[int(i)] for i in walk))
    raise SamplerExhaustedError(
        f"no valid random walk in env {g.env_id!r} after "
        f"{cfg.max_resample_attempts} attempts "
        f"({dead_ends} dead ends, {too_close} endpoints too close)",
        attempts=cfg.max_resample_attempts, dead_ends=dead_ends, too_close=too_close)


def sample_dataset(graphs, n_per_env: int, cfg: SamplerConfig, seed: int,
                   dist: LengthDistribution | None = None,
                   split: str = "synthetic",
                   stream_tag: str = "sample") -> PathDataset:
    """n_per_env samples per environment with globally unique path ids.

    Each environment is sampled from its own (seed, tag, env_id) substream,
    and path ids are assigned from the sorted environment order, so the
    result is independent of the order graphs are passed in. An environment
    whose sampler exhausts is skipped whole, with a SamplerSkippedWarning.
    """
    if n_per_env < 1:
        raise ConfigError(f"n_per_env must be >= 1, got {n_per_env}")
    if cfg.strategy == "random_walk" and dist is None:
        raise ConfigError("random_walk sampling requires a length distribution")

    if isinstance(graphs, dict):
        graphs = list(graphs.values())
    env_order = sorted(graphs, key=lambda g: g.env_id)

    samples: list[PathSample] = []
    for env_idx, g in enumerate(env_order):
        rng = np.random.default_rng(
            [key_entropy(seed), key_entropy(stream_tag), key_entropy(g.env_id)])
        base = env_idx * n_per_env
        try:
            env_samples = []
            for k in range(n_per_env):
                if cfg.strategy == "shortest":
                    env_samples.append(sample_shortest_path(g, cfg, rng, path_id=base + k))
                else:
                    env_samples.append(sample_random_walk(g, dist, cfg, rng,
                                                          path_id=base + k))
        except SamplerExhaustedError as exc:
            warnings.warn(
                f"environment {g.env_id!r} skipped: {exc}", SamplerSkippedWarning,
                stacklevel=2)
            continue
        samples.extend(env_samples)
    return PathDataset(tuple(samples), split=split)
