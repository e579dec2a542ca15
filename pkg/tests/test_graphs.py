import math
from fractions import Fraction
from itertools import product

import numpy as np
import pytest

from graphon_sampling.core import Grid, StepGraphon, ValidationError, constant_graphon
from graphon_sampling.graphs import (
    Graph,
    graph_to_graphon,
    homomorphism_density,
    homomorphism_density_graphon,
    sample_w_random_graph,
)

from conftest import random_graphon


def brute_hom(f: Graph, g: Graph) -> int:
    adj = g.adjacency()
    return sum(
        all(adj[phi[a], phi[b]] for a, b in f.edges) for phi in product(range(g.n), repeat=f.n)
    )


def random_graph(rng, n: int, p: float | None = None) -> Graph:
    p = rng.uniform(0.1, 0.9) if p is None else p
    return Graph.from_edges(n, [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p])


def test_graph_rejects_loops_and_dedups():
    with pytest.raises(ValidationError):
        Graph.from_edges(3, [(1, 1)])
    with pytest.raises(ValidationError):
        Graph.from_edges(2, [(0, 2)])
    g = Graph.from_edges(3, [(0, 1), (1, 0), (2, 1)])
    assert g.sorted_edges() == [(0, 1), (1, 2)]


def test_graph_to_graphon_examples():
    w = graph_to_graphon(Graph.complete(2))
    np.testing.assert_array_equal(w.grid.breakpoints, [0, 0.5, 1])
    np.testing.assert_array_equal(w.values, [[0, 1], [1, 0]])
    np.testing.assert_array_equal(graph_to_graphon(Graph(3, frozenset())).values, np.zeros((3, 3)))
    np.testing.assert_array_equal(
        graph_to_graphon(Graph.path(3)).values, [[0, 1, 0], [1, 0, 1], [0, 1, 0]]
    )


def test_graph_to_graphon_depends_on_labeling():
    a = graph_to_graphon(Graph.from_edges(3, [(0, 1)]))
    b = graph_to_graphon(Graph.from_edges(3, [(1, 2)]))
    assert not np.array_equal(a.values, b.values)


@pytest.mark.parametrize("seed", [0, 1, 17])
def test_sample_extremes(seed):
    assert sample_w_random_graph(constant_graphon(1.0), 5, seed) == Graph.complete(5)
    assert sample_w_random_graph(constant_graphon(0.0), 5, seed).n_edges == 0


def test_sample_reproducible_and_prefix_stable(rng):
    w = random_graphon(rng, 4)
    g1 = sample_w_random_graph(w, 40, 123)
    assert g1 == sample_w_random_graph(w, 40, 123)
    assert g1 != sample_w_random_graph(w, 40, 124)
    small = sample_w_random_graph(w, 25, 123)
    induced = {(i, j) for i, j in g1.edges if j < 25}
    assert small.edges == induced


def test_sample_respects_block_structure():
    w = StepGraphon(Grid.uniform(2), [[1.0, 0.0], [0.0, 1.0]])
    g = sample_w_random_graph(w, 60, 5)
    from graphon_sampling.graphs import _streams

    latent, _ = _streams(5)
    side = latent.random(60) >= 0.5
    for i, j in g.edges:
        assert side[i] == side[j]
    same = sum(side[i] == side[j] for i in range(60) for j in range(i + 1, 60))
    assert g.n_edges == same


def test_sample_rejects_kernel():
    with pytest.raises(ValidationError):
        sample_w_random_graph(constant_graphon(0.5).as_kernel(), 5, 0)


def test_edge_count_statistics():
    w = constant_graphon(0.5)
    counts = [sample_w_random_graph(w, 100, s).n_edges for s in range(200)]
    sigma = math.sqrt(4950 * 0.25)
    assert abs(np.mean(counts) - 2475) <= 3 * sigma


def test_hom_density_examples(rng):
    k1 = Graph(1, frozenset())
    for _ in range(5):
        g = random_graph(rng, int(rng.integers(1, 8)))
        assert homomorphism_density(k1, g) == 1
        assert homomorphism_density(Graph.complete(2), g) == Fraction(2 * g.n_edges, g.n**2)
    assert homomorphism_density(Graph.complete(3), Graph.complete(3)) == Fraction(2, 9)


def test_hom_count_matches_brute_force(rng):
    for _ in range(40):
        f = random_graph(rng, int(rng.integers(1, 5)))
        g = random_graph(rng, int(rng.integers(1, 7)))
        assert homomorphism_density(f, g) == Fraction(brute_hom(f, g), g.n**f.n)


def test_hom_size_guards():
    with pytest.raises(ValidationError):
        homomorphism_density(Graph.complete(7), Graph.complete(3))
    with pytest.raises(ValidationError):
        homomorphism_density_graphon(Graph.complete(6), constant_graphon(0.5))
    with pytest.raises(ValidationError):
        homomorphism_density_graphon(Graph.complete(2), constant_graphon(0.5, 65))


@pytest.mark.parametrize("p", [0.0, 0.3, 1.0])
def test_graphon_hom_density_constant(p):
    w = constant_graphon(p, 3)
    assert homomorphism_density_graphon(Graph.complete(2), w) == pytest.approx(p, abs=1e-15)
    assert homomorphism_density_graphon(Graph.complete(3), w) == pytest.approx(p**3, abs=1e-15)
    assert homomorphism_density_graphon(Graph.complete(3), w, exact=True) == Fraction(p) ** 3


def test_embedding_preserves_hom_density(rng):
    for _ in range(30):
        f = random_graph(rng, int(rng.integers(1, 5)))
        g = random_graph(rng, int(rng.integers(1, 9)))
        wg = graph_to_graphon(g)
        exact = homomorphism_density(f, g)
        assert homomorphism_density_graphon(f, wg, exact=True) == exact
        assert homomorphism_density_graphon(f, wg) == pytest.approx(float(exact), abs=1e-14)


def test_graphon_density_exact_matches_float(rng):
    for _ in range(10):
        w = random_graphon(rng, int(rng.integers(1, 6)))
        f = random_graph(rng, int(rng.integers(1, 5)))
        assert float(homomorphism_density_graphon(f, w, exact=True)) == pytest.approx(
            homomorphism_density_graphon(f, w), abs=1e-13
        )


def test_k2_density_monotone(rng):
    for _ in range(20):
        w = random_graphon(rng, 5)
        bump = rng.uniform(0, 1, size=(5, 5))
        bigger = StepGraphon(w.grid, np.minimum(1.0, w.values + np.triu(bump) + np.triu(bump, 1).T))
        k2 = Graph.complete(2)
        assert homomorphism_density_graphon(k2, w) <= homomorphism_density_graphon(k2, bigger) + 1e-15


@pytest.mark.parametrize("pattern", [Graph.complete(2), Graph.complete(3)])
def test_empirical_density_converges(pattern):
    # non-injective maps bias t(F, G) by at most C(|V(F)|, 2) / n
    w = StepGraphon(Grid([0, 0.4, 1]), [[0.8, 0.2], [0.2, 0.6]])
    target = homomorphism_density_graphon(pattern, w)
    gaps = []
    for n in (10, 40, 120):
        vals = [float(homomorphism_density(pattern, sample_w_random_graph(w, n, s))) for s in range(100)]
        se = np.std(vals, ddof=1) / math.sqrt(len(vals))
        bias = math.comb(pattern.n, 2) / n
        gap = abs(np.mean(vals) - target)
        assert gap <= 4 * se + bias
        gaps.append(gap)
    assert gaps[-1] < gaps[0]
