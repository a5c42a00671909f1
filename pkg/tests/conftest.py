"""Shared corpus generators for the test suite."""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent))

from graphdn.graph import Edge, MetricGraph, build_graph


def random_metric_graph(
    rng: np.random.Generator,
    max_vertices: int = 50,
    zero_potential: bool = False,
) -> MetricGraph:
    """Random connected metric graph: a spanning tree plus a few chords.

    Lengths are uniform in [0.1, 2]; potentials uniform in [0, 4] unless
    ``zero_potential``.  Boundary is all degree-one vertices, plus a random
    relative-boundary marker (or vertex 0 when no leaves survive).
    """
    n = int(rng.integers(2, max_vertices + 1))
    pairs = {(int(rng.integers(0, v)), v) for v in range(1, n)}
    extra = int(rng.integers(0, n // 3 + 1))
    for _ in range(extra):
        u = int(rng.integers(0, n))
        v = int(rng.integers(0, n))
        if u == v:
            continue
        pairs.add((min(u, v), max(u, v)))

    edges = []
    for u, v in sorted(pairs):
        length = float(rng.uniform(0.1, 2.0))
        kappa2 = 0.0 if zero_potential else float(rng.uniform(0.0, 4.0))
        edges.append(Edge(u, v, length, 1.0, kappa2))

    deg = np.zeros(n, dtype=int)
    for e in edges:
        deg[e.a] += 1
        deg[e.b] += 1
    boundary = {v for v in range(n) if deg[v] == 1}
    if not boundary or rng.random() < 0.3:
        boundary.add(int(rng.integers(0, n)))
    return build_graph(edges, boundary=boundary)


def graph_corpus(count: int, seed: int = 1234, max_vertices: int = 50):
    """Deterministic corpus; even-indexed graphs are potential-free."""
    rng = np.random.default_rng(seed)
    return [
        random_metric_graph(rng, max_vertices, zero_potential=(i % 2 == 0))
        for i in range(count)
    ]
