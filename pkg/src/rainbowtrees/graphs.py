"""Vertex-labelled graphs with optional edge colourings, plus random models.

The central type is ColouredGraph: an immutable simple graph on integer
labels with an optional total edge colouring.  Subgraphs keep their
original labels, so a graph may occupy only part of its label space;
isolated vertices still count toward its order.

Random models provided here: the binomial random graph, dense seed graphs
of prescribed minimum degree, the perturbed union of a seed with a random
graph (tracking which edges came from the random part), and uniform
independent edge colourings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, Optional, Tuple

import numpy as np

from .errors import ParameterError
from .rng import RandomSource

Edge = Tuple[int, int]

SEED_KINDS = ("complete", "clique-union", "multipartite", "random-supergraph")


def canonical_edge(u: int, v: int) -> Edge:
    if u == v:
        raise ParameterError("loops are not allowed: (%d, %d)" % (u, v))
    return (u, v) if u < v else (v, u)


class ColouredGraph:
    """Immutable simple graph with an optional edge colouring."""

    __slots__ = ("n", "edges", "colouring", "palette_size", "vertex_set",
                 "_adj", "_edge_array")

    def __init__(self, n: int, edges: Iterable[Edge],
                 colouring: Optional[Dict[Edge, int]] = None,
                 palette_size: int = 0,
                 vertex_set: Optional[Iterable[int]] = None):
        if n < 0:
            raise ParameterError("n must be nonnegative, got %d" % n)
        self.n = int(n)
        if vertex_set is None:
            self.vertex_set = frozenset(range(self.n))
        else:
            self.vertex_set = frozenset(int(v) for v in vertex_set)
            for v in self.vertex_set:
                if not 0 <= v < self.n:
                    raise ParameterError("vertex %d outside label space [0, %d)"
                                         % (v, self.n))
        es = frozenset(canonical_edge(u, v) for u, v in edges)
        for u, v in es:
            if u not in self.vertex_set or v not in self.vertex_set:
                raise ParameterError("edge (%d, %d) leaves the vertex set" % (u, v))
        self.edges = es
        if colouring is None:
            if palette_size:
                raise ParameterError("palette_size without colouring")
            self.colouring = None
            self.palette_size = 0
        else:
            if palette_size <= 0:
                raise ParameterError("coloured graph needs palette_size >= 1")
            col = {canonical_edge(u, v): int(c) for (u, v), c in colouring.items()}
            if set(col) != es:
                raise ParameterError("colouring must cover exactly the edge set")
            for e, c in col.items():
                if not 0 <= c < palette_size:
                    raise ParameterError("colour %d of edge %s outside palette [0, %d)"
                                         % (c, e, palette_size))
            self.colouring = col
            self.palette_size = int(palette_size)
        self._adj = None
        self._edge_array = None

    @classmethod
    def _from_sorted_pairs(cls, n: int, rows: np.ndarray) -> "ColouredGraph":
        """Trusted fast path: rows must be canonical (u < v), duplicate-free
        and lexicographically sorted, with entries in [0, n)."""
        g = object.__new__(cls)
        g.n = int(n)
        g.vertex_set = frozenset(range(int(n)))
        g.edges = frozenset(zip(rows[:, 0].tolist(), rows[:, 1].tolist())) \
            if len(rows) else frozenset()
        g.colouring = None
        g.palette_size = 0
        g._adj = None
        g._edge_array = np.ascontiguousarray(rows, dtype=np.int64).reshape(-1, 2)
        return g

    # -- basic accessors ------------------------------------------------

    @property
    def order(self) -> int:
        return len(self.vertex_set)

    @property
    def size(self) -> int:
        return len(self.edges)

    @property
    def is_coloured(self) -> bool:
        return self.colouring is not None

    def adjacency(self) -> Dict[int, Tuple[int, ...]]:
        if self._adj is None:
            adj = {v: [] for v in self.vertex_set}
            for u, v in self.edges:
                adj[u].append(v)
                adj[v].append(u)
            self._adj = {v: tuple(sorted(ns)) for v, ns in adj.items()}
        return self._adj

    def neighbours(self, v: int) -> Tuple[int, ...]:
        return self.adjacency()[v]

    def degree(self, v: int) -> int:
        return len(self.adjacency()[v])

    def min_degree(self) -> int:
        if not self.vertex_set:
            raise ParameterError("min_degree of an empty graph")
        return min(len(ns) for ns in self.adjacency().values())

    def max_degree(self) -> int:
        if not self.vertex_set:
            raise ParameterError("max_degree of an empty graph")
        return max(len(ns) for ns in self.adjacency().values())

    def has_edge(self, u: int, v: int) -> bool:
        return canonical_edge(u, v) in self.edges

    def colour_of(self, u: int, v: int) -> int:
        if self.colouring is None:
            raise ParameterError("graph is uncoloured")
        return self.colouring[canonical_edge(u, v)]

    def colours_used(self) -> FrozenSet[int]:
        if self.colouring is None:
            raise ParameterError("graph is uncoloured")
        return frozenset(self.colouring.values())

    def is_rainbow(self) -> bool:
        """True when the colouring is injective on the edge set."""
        if self.colouring is None:
            raise ParameterError("graph is uncoloured")
        return len(set(self.colouring.values())) == len(self.edges)

    def edge_array(self) -> np.ndarray:
        """Edges as a lexicographically sorted (m, 2) int64 array."""
        if self._edge_array is None:
            arr = np.array(sorted(self.edges), dtype=np.int64)
            self._edge_array = arr.reshape(-1, 2)
        return self._edge_array

    def colour_array(self) -> np.ndarray:
        """Colours aligned with edge_array() rows."""
        if self.colouring is None:
            raise ParameterError("graph is uncoloured")
        return np.array([self.colouring[(int(u), int(v))]
                         for u, v in self.edge_array()], dtype=np.int64)

    # -- derived graphs ---------------------------------------------------

    def subgraph(self, vertices: Iterable[int]) -> "ColouredGraph":
        """Induced subgraph on `vertices`, labels preserved."""
        vs = frozenset(int(v) for v in vertices)
        if not vs <= self.vertex_set:
            raise ParameterError("subgraph vertices must lie in the vertex set")
        es = [e for e in self.edges if e[0] in vs and e[1] in vs]
        col = None
        if self.colouring is not None:
            col = {e: self.colouring[e] for e in es}
        return ColouredGraph(self.n, es, col, self.palette_size, vs)

    def without_edges(self, drop: Iterable[Edge]) -> "ColouredGraph":
        """Same vertex set, edge set minus `drop` (colouring restricted)."""
        gone = {canonical_edge(u, v) for u, v in drop}
        es = [e for e in self.edges if e not in gone]
        col = None
        if self.colouring is not None:
            col = {e: self.colouring[e] for e in es}
        return ColouredGraph(self.n, es, col, self.palette_size, self.vertex_set)

    def with_colouring(self, colouring: Dict[Edge, int],
                       palette_size: int) -> "ColouredGraph":
        return ColouredGraph(self.n, self.edges, colouring, palette_size,
                             self.vertex_set)

    def uncoloured(self) -> "ColouredGraph":
        return ColouredGraph(self.n, self.edges, None, 0, self.vertex_set)

    def __repr__(self):
        tag = "coloured, palette %d" % self.palette_size if self.is_coloured \
            else "uncoloured"
        return "<ColouredGraph order=%d size=%d (%s)>" % (self.order, self.size, tag)


def is_rainbow(graph: ColouredGraph, edge_subset: Optional[Iterable[Edge]] = None) -> bool:
    """True iff the colours on `edge_subset` (default: all edges) are
    pairwise distinct."""
    if graph.colouring is None:
        raise ParameterError("graph is uncoloured")
    if edge_subset is None:
        return graph.is_rainbow()
    subset = {canonical_edge(u, v) for u, v in edge_subset}
    for e in subset:
        if e not in graph.edges:
            raise ParameterError("edge %s is not in the graph" % (e,))
    return len({graph.colouring[e] for e in subset}) == len(subset)


def external_neighbourhood(graph: ColouredGraph, block: Iterable[int]) -> FrozenSet[int]:
    """Vertices outside `block` with at least one neighbour inside it."""
    inside = set(block)
    out = set()
    adj = graph.adjacency()
    for v in inside:
        out.update(adj[v])
    return frozenset(out - inside)


def complete_graph(n: int) -> ColouredGraph:
    edges = [(u, v) for u in range(n) for v in range(u + 1, n)]
    return ColouredGraph(n, edges)


# -- random models --------------------------------------------------------


def _pair_offsets(n: int) -> np.ndarray:
    u = np.arange(n + 1, dtype=np.int64)
    return u * (n - 1) - u * (u - 1) // 2


def _pairs_from_indices(n: int, ks: np.ndarray) -> np.ndarray:
    """Invert lexicographic pair indices to (u, v) rows with u < v."""
    offsets = _pair_offsets(n)
    us = np.searchsorted(offsets, ks, side="right") - 1
    vs = ks - offsets[us] + us + 1
    return np.stack([us, vs], axis=1)


def _skip_sample_indices(total: int, p: float, gen: np.random.Generator) -> np.ndarray:
    """Each index in [0, total) independently with probability p.

    Geometric gap skipping: cost proportional to the number of successes
    rather than to `total`; the method of choice for sparse densities.
    """
    if total <= 0 or p <= 0.0:
        return np.empty(0, dtype=np.int64)
    if p >= 1.0:
        return np.arange(total, dtype=np.int64)
    log_q = math.log1p(-p)
    chunks = []
    pos = -1
    while pos < total - 1:
        expect = (total - 1 - pos) * p
        batch = max(64, int(expect + 4.0 * math.sqrt(expect + 1.0)) + 16)
        u = np.maximum(gen.random(batch), 1e-300)
        gaps = np.floor(np.log(u) / log_q).astype(np.int64) + 1
        ks = pos + np.cumsum(gaps)
        inside = ks < total
        if inside.all():
            chunks.append(ks)
            pos = int(ks[-1])
        else:
            chunks.append(ks[inside])
            break
    if not chunks:
        return np.empty(0, dtype=np.int64)
    return np.concatenate(chunks)


def _sweep_sample_indices(total: int, p: float, gen: np.random.Generator) -> np.ndarray:
    """Bernoulli sweep over all indices, chunked to bound memory."""
    chunks = []
    step = 1 << 22
    for start in range(0, total, step):
        width = min(step, total - start)
        mask = gen.random(width) < p
        chunks.append(np.nonzero(mask)[0] + start)
    if not chunks:
        return np.empty(0, dtype=np.int64)
    return np.concatenate(chunks).astype(np.int64)


def gen_gnp(n: int, p: float, source: RandomSource) -> ColouredGraph:
    """The binomial random graph: each pair is an edge with probability p.

    Sparse densities (p < 0.1) use geometric skipping; denser ones use a
    plain Bernoulli sweep.  The branch depends only on p, so a fixed
    (n, p, source) always yields the same graph.
    """
    if not 0.0 <= p <= 1.0:
        raise ParameterError("edge probability must lie in [0, 1], got %r" % p)
    total = n * (n - 1) // 2
    gen = source.generator()
    if p < 0.1:
        ks = _skip_sample_indices(total, p, gen)
    else:
        ks = _sweep_sample_indices(total, p, gen)
    rows = _pairs_from_indices(n, ks)
    return ColouredGraph._from_sorted_pairs(n, rows)


def gen_seed_graph(n: int, delta: float, kind: str,
                   source: Optional[RandomSource] = None,
                   parts: Optional[int] = None) -> ColouredGraph:
    """A dense graph on n vertices with minimum degree at least ceil(delta*n).

    Kinds: "complete"; "clique-union" (disjoint cliques, as equal as
    possible); "multipartite" (complete multipartite, balanced classes);
    "random-supergraph" (binomial graph above the degree threshold, with
    deficient vertices repaired deterministically).  `parts` fixes the
    number of cliques / classes; when omitted, the largest feasible
    clique count (resp. smallest feasible class count) is used.
    """
    if kind not in SEED_KINDS:
        raise ParameterError("unknown seed kind %r (choose from %s)"
                             % (kind, ", ".join(SEED_KINDS)))
    if not 0.0 < delta < 1.0:
        raise ParameterError("delta must lie in (0, 1), got %r" % delta)
    if n < 2:
        raise ParameterError("seed graphs need n >= 2")
    need = math.ceil(delta * n - 1e-9)

    if kind == "complete":
        g = complete_graph(n)
    elif kind == "clique-union":
        if parts is None:
            parts = max(1, int(1.0 / delta))
            while parts > 1 and n // parts - 1 < need:
                parts -= 1
        if n // parts - 1 < need:
            raise ParameterError(
                "clique-union with %d cliques on n=%d gives min degree %d < %d"
                % (parts, n, n // parts - 1, need))
        blocks = _balanced_parts(n, parts)
        edges = []
        for part in blocks:
            edges.extend((part[i], part[j])
                         for i in range(len(part)) for j in range(i + 1, len(part)))
        g = ColouredGraph(n, edges)
    elif kind == "multipartite":
        if parts is None:
            parts = max(2, math.ceil(1.0 / (1.0 - delta)))
            while parts < n and n - math.ceil(n / parts) < need:
                parts += 1
        if n - math.ceil(n / parts) < need:
            raise ParameterError(
                "complete multipartite with %d classes on n=%d gives "
                "min degree %d < %d"
                % (parts, n, n - math.ceil(n / parts), need))
        blocks = _balanced_parts(n, parts)
        edges = []
        for a in range(len(blocks)):
            for b in range(a + 1, len(blocks)):
                edges.extend((u, v) for u in blocks[a] for v in blocks[b])
        g = ColouredGraph(n, edges)
    else:
        if source is None:
            raise ParameterError("random-supergraph needs a RandomSource")
        slack = 2.0 * math.sqrt(delta * math.log(max(n, 2)) / n) \
            + 2.0 * math.log(max(n, 2)) / n
        q = min(1.0, delta + slack)
        g = gen_gnp(n, q, source.substream("seed-gnp"))
        extra = set()
        adj = {v: set(ns) for v, ns in g.adjacency().items()}
        for v in range(n):
            want = need - len(adj[v])
            if want <= 0:
                continue
            for u in range(n):
                if want <= 0:
                    break
                if u != v and u not in adj[v]:
                    extra.add(canonical_edge(u, v))
                    adj[v].add(u)
                    adj[u].add(v)
                    want -= 1
        if extra:
            g = ColouredGraph(n, set(g.edges) | extra)

    if g.min_degree() < need:
        raise ParameterError(
            "seed kind %r cannot reach minimum degree %d at n=%d (got %d)"
            % (kind, need, n, g.min_degree()))
    return g


def _balanced_parts(n: int, k: int):
    sizes = [n // k + (1 if i < n % k else 0) for i in range(k)]
    parts, at = [], 0
    for s in sizes:
        parts.append(list(range(at, at + s)))
        at += s
    return [p for p in parts if p]


@dataclass(frozen=True)
class PerturbedGraph:
    """A seed graph unioned with an independent binomial random graph.

    `r_edges` is the full sample of random edges, including those that
    happened to coincide with seed edges; this is what makes the seed
    minus the random part recoverable.
    """

    seed: ColouredGraph
    r_edges: FrozenSet[Edge]
    union: ColouredGraph = field(repr=False)

    def seed_minus_r(self) -> ColouredGraph:
        """The seed with every random-sample edge removed."""
        return self.seed.without_edges(self.r_edges)


def perturb(seed: ColouredGraph, p: float, source: RandomSource) -> PerturbedGraph:
    """Overlay an independent binomial graph on `seed` (colouring discarded)."""
    if seed.vertex_set != frozenset(range(seed.n)):
        raise ParameterError("perturbation needs a graph on its full label space")
    if seed.is_coloured:
        seed = seed.uncoloured()
    r = gen_gnp(seed.n, p, source)
    union = ColouredGraph(seed.n, set(seed.edges) | set(r.edges))
    return PerturbedGraph(seed=seed, r_edges=r.edges, union=union)


def uniform_colouring(graph: ColouredGraph, palette_size: int,
                      source: RandomSource) -> ColouredGraph:
    """Colour every edge independently and uniformly from the palette.

    Colours are assigned in lexicographic edge order, so the result is a
    pure function of (graph, palette_size, source).
    """
    if palette_size < 1:
        raise ParameterError("palette_size must be >= 1")
    arr = graph.edge_array()
    cols = source.generator().integers(0, palette_size, size=len(arr))
    colouring = {(int(u), int(v)): int(c) for (u, v), c in zip(arr, cols)}
    return graph.with_colouring(colouring, palette_size)
