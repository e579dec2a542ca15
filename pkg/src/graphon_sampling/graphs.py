"""Simple graphs, their step-graphon embedding, w-random graphs and
homomorphism densities."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

import numpy as np

from .core import Grid, StepGraphon, ValidationError

# Versioned identifier of the sampling stream layout; bump on any change.
RNG_ALGORITHM = "philox4x32-10/seedseq/pairstream-v1"

MAX_HOM_PATTERN = 6
MAX_GRAPHON_PATTERN = 5
MAX_GRAPHON_CELLS = 64


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph on vertices 0..n-1 (edges stored as i < j)."""

    n: int
    edges: frozenset

    def __post_init__(self):
        if self.n < 0:
            raise ValidationError("vertex count must be nonnegative", "bad-graph")
        clean = set()
        for e in self.edges:
            i, j = (int(v) for v in e)
            if i == j:
                raise ValidationError(f"loop at vertex {i}", "bad-graph")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise ValidationError(f"edge {(i, j)} out of range", "bad-graph")
            clean.add((min(i, j), max(i, j)))
        object.__setattr__(self, "edges", frozenset(clean))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable) -> "Graph":
        return cls(n, frozenset(tuple(e) for e in edges))

    @classmethod
    def complete(cls, n: int) -> "Graph":
        return cls(n, frozenset((i, j) for i in range(n) for j in range(i + 1, n)))

    @classmethod
    def path(cls, n: int) -> "Graph":
        return cls(n, frozenset((i, i + 1) for i in range(n - 1)))

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n, self.n), dtype=np.int8)
        for i, j in self.edges:
            a[i, j] = a[j, i] = 1
        return a

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)


def graph_to_graphon(g: Graph) -> StepGraphon:
    """The {0,1}-valued step graphon of ``g`` under its given labeling."""
    if g.n < 1:
        raise ValidationError("graph must have at least one vertex", "bad-graph")
    return StepGraphon(Grid.uniform(g.n), g.adjacency().astype(float))


def _streams(seed: int):
    if seed < 0:
        raise ValidationError("seed must be a nonnegative integer", "bad-seed")
    latent = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(0,))))
    pairs = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(1,))))
    return latent, pairs


def sample_w_random_graph(w: StepGraphon, n: int, seed: int) -> Graph:
    """Draw G(n, w).

    Latent positions x_0..x_{n-1} are the first n uniforms of the latent
    stream.  Pair (i, j), i < j, uses uniform number j(j-1)/2 + i of the pair
    stream, so every edge decision depends only on (seed, i, j) and G(m, w)
    is the induced subgraph of G(n, w) on the first m vertices.
    """
    if w.mode != "graphon":
        raise ValidationError("w-random graphs need a graphon, not a signed kernel", "kernel-mode")
    if n < 1:
        raise ValidationError("n must be positive", "bad-n")
    latent, pairs = _streams(seed)
    x = latent.random(n)
    u = pairs.random(n * (n - 1) // 2)
    j, i = np.tril_indices(n, -1)  # row-major lower triangle: (j, i) with i < j, in pair order
    cells = w.grid.cell_of(x)
    prob = w.values[cells[i], cells[j]]
    hit = u < prob
    return Graph(n, frozenset(zip(i[hit].tolist(), j[hit].tolist())))


def _hom_count(f: Graph, g: Graph) -> int:
    """Number of edge-preserving maps V(f) -> V(g), by backtracking."""
    if f.n == 0:
        return 1
    adj = [set() for _ in range(g.n)]
    for a, b in g.edges:
        adj[a].add(b)
        adj[b].add(a)
    fnbrs = [[] for _ in range(f.n)]
    for a, b in f.edges:
        # constraint checked when the later endpoint is placed
        fnbrs[max(a, b)].append(min(a, b))
    phi = [0] * f.n

    def extend(v: int) -> int:
        if v == f.n:
            return 1
        earlier = fnbrs[v]
        if earlier:
            cands = set(adj[phi[earlier[0]]])
            for u in earlier[1:]:
                cands &= adj[phi[u]]
        else:
            cands = range(g.n)
        total = 0
        for c in cands:
            phi[v] = c
            total += extend(v + 1)
        return total

    return extend(0)


def homomorphism_density(f: Graph, g: Graph) -> Fraction:
    """t(f, g) = hom(f, g) / |V(g)|^|V(f)| as an exact rational."""
    if f.n > MAX_HOM_PATTERN:
        raise ValidationError(
            f"pattern graph has {f.n} vertices; brute force allows at most {MAX_HOM_PATTERN}",
            "size-guard",
        )
    if g.n == 0:
        raise ValidationError("target graph must have at least one vertex", "bad-graph")
    return Fraction(_hom_count(f, g), g.n**f.n)


def homomorphism_density_graphon(f: Graph, w: StepGraphon, exact: bool = False):
    """t(f, w) as the cell sum of prod_{edges} w_{c(u)c(v)} * prod_v m_{c(v)}.

    With ``exact=True`` the sum runs over exact rationals (the float values
    of ``w`` and the exact cell masses) and a Fraction is returned.
    """
    if f.n > MAX_GRAPHON_PATTERN:
        raise ValidationError(
            f"pattern graph has {f.n} vertices; at most {MAX_GRAPHON_PATTERN} allowed", "size-guard"
        )
    if w.n_cells > MAX_GRAPHON_CELLS:
        raise ValidationError(
            f"graphon has {w.n_cells} cells; at most {MAX_GRAPHON_CELLS} allowed", "size-guard"
        )
    if f.n == 0:
        return Fraction(1) if exact else 1.0
    if exact:
        return _exact_cell_sum(f, w)
    letters = "abcdefghij"
    operands, subs = [], []
    for v in range(f.n):
        operands.append(w.grid.masses)
        subs.append(letters[v])
    for a, b in f.sorted_edges():
        operands.append(w.values)
        subs.append(letters[a] + letters[b])
    expr = ",".join(subs) + "->"
    return float(np.einsum(expr, *operands, optimize=True))


def _exact_cell_sum(f: Graph, w: StepGraphon) -> Fraction:
    k = w.n_cells
    masses = w.grid.exact_masses()
    vals = [[Fraction(float(w.values[a, b])) for b in range(k)] for a in range(k)]
    fnbrs = [[] for _ in range(f.n)]
    for a, b in f.edges:
        fnbrs[max(a, b)].append(min(a, b))
    phi = [0] * f.n

    def extend(v: int, acc: Fraction) -> Fraction:
        if v == f.n:
            return acc
        total = Fraction(0)
        for c in range(k):
            term = acc * masses[c]
            for u in fnbrs[v]:
                term *= vals[phi[u]][c]
                if not term:
                    break
            if term:
                phi[v] = c
                total += extend(v + 1, term)
        return total

    return extend(0, Fraction(1))


__all__ = [
    "Graph",
    "RNG_ALGORITHM",
    "graph_to_graphon",
    "sample_w_random_graph",
    "homomorphism_density",
    "homomorphism_density_graphon",
]

