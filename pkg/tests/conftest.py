from __future__ import annotations

import math

import numpy as np
import pytest

from navprior.envgraph import EnvironmentGraph, SynthConfig, Viewpoint, generate_synthetic_env


def vp(nid, x=0.0, y=0.0, z=0.0, labels=()):
    return Viewpoint(nid, (float(x), float(y), float(z)), True, tuple(labels))


def line_graph(spacing=2.0, ids=("A", "B", "C", "D", "E")):
    """Nodes on the x axis, consecutive edges of equal length."""
    nodes = [vp(nid, i * spacing) for i, nid in enumerate(ids)]
    edges = [(ids[i], ids[i + 1]) for i in range(len(ids) - 1)]
    return EnvironmentGraph("line", nodes, edges)


def hexagon_graph(radius=10.0):
    """Cycle C6 on a regular hexagon (side length == radius)."""
    ids = [f"h{k}" for k in range(6)]
    nodes = [vp(ids[k],
                radius * math.cos(k * math.pi / 3),
                radius * math.sin(k * math.pi / 3)) for k in range(6)]
    edges = [(ids[k], ids[(k + 1) % 6]) for k in range(6)]
    return EnvironmentGraph("hexagon", nodes, edges)


def complete_graph(n=8, radius=50.0):
    """K_n on a wide circle, all pairwise distances >= 3 m."""
    ids = [f"k{k}" for k in range(n)]
    nodes = [vp(ids[k],
                radius * math.cos(2 * k * math.pi / n),
                radius * math.sin(2 * k * math.pi / n)) for k in range(n)]
    edges = [(ids[i], ids[j]) for i in range(n) for j in range(i + 1, n)]
    return EnvironmentGraph("complete", nodes, edges)


def random_env(seed, n_nodes=50, radius=2.8, extent=(15.0, 15.0, 2.5), env_id=None):
    cfg = SynthConfig(n_nodes=n_nodes, radius=radius, extent=extent, max_attempts=30)
    return generate_synthetic_env(cfg, np.random.default_rng(seed),
                                  env_id or f"rand{seed}")


@pytest.fixture
def line():
    return line_graph()


@pytest.fixture
def hexagon():
    return hexagon_graph()
