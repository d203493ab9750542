"""Rainbow spanning trees through connectivity partitions.

A dense graph splits into vertex blocks whose induced subgraphs are
highly connected relative to the minimum degree; on top of such a
partition, a uniformly coloured perturbed graph almost surely satisfies
the classical partition criterion for rainbow spanning trees (every way
of cutting the vertex set into s parts leaves at least s - 1 distinctly
coloured crossing edges), which is both necessary and sufficient.  This
module carries the partition builder with its connectivity audits, an
exact checker of the criterion at small orders, a constructive finder
based on matroid intersection, and the crossing-edge count the argument
rests on.

Connectivity is computed two independent ways on purpose: blocks are
split along networkx minimum node cuts, while the audits rerun the
numbers through a local max-flow implementation kept in this file.
"""

from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass
from typing import (Deque, Dict, FrozenSet, Iterable, List, Optional,
                    Sequence, Set, Tuple)

import networkx as nx
from networkx.algorithms.connectivity import (
    build_auxiliary_node_connectivity, local_node_connectivity,
    minimum_st_node_cut)
from networkx.algorithms.flow import build_residual_network

from .errors import ParameterError
from .graphs import ColouredGraph

Pair = Tuple[int, int]


# ---------------------------------------------------------------------------
# vertex partitions


@dataclass(frozen=True)
class VertexPartition:
    """Disjoint non-empty vertex blocks covering the graph's vertex set."""

    blocks: Tuple[FrozenSet[int], ...]

    def validate(self, vertices: Iterable[int]) -> None:
        want = frozenset(int(v) for v in vertices)
        seen: Set[int] = set()
        for block in self.blocks:
            assert block, "empty block"
            assert not (block & seen), "blocks overlap"
            seen |= block
        assert seen == want, "blocks do not cover the vertex set"

    @property
    def t(self) -> int:
        return len(self.blocks)


def partition_from_lists(parts: Iterable[Iterable[int]]) -> VertexPartition:
    blocks = tuple(sorted((frozenset(int(v) for v in part) for part in parts),
                          key=min))
    return VertexPartition(blocks)


# ---------------------------------------------------------------------------
# vertex connectivity by max flow

# Local connectivity between two non-adjacent vertices equals the largest
# number of internally vertex-disjoint paths between them, computed here
# as max flow in the standard vertex-split digraph: every other vertex
# becomes an in->out arc of capacity one, every edge a pair of arcs of
# effectively unbounded capacity.


def _adjacency(graph: ColouredGraph,
               vertices: Optional[Iterable[int]] = None) -> Dict[int, Set[int]]:
    verts = set(graph.vertex_set if vertices is None else vertices)
    adj: Dict[int, Set[int]] = {v: set() for v in verts}
    for u, v in graph.edges:
        if u in verts and v in verts:
            adj[u].add(v)
            adj[v].add(u)
    return adj


def _local_connectivity(adj: Dict[int, Set[int]], s: int, t: int,
                        cap: Optional[int] = None) -> int:
    """Max number of internally disjoint s-t paths, capped when asked.

    Plain BFS augmentation on the split digraph; each round adds one
    unit, so the cap doubles as a work bound for threshold questions
    where the exact value past the cap is irrelevant.
    """
    if t in adj[s]:
        raise ParameterError("local connectivity needs a non-adjacent pair")
    limit = len(adj) if cap is None else int(cap)
    if limit <= 0:
        return 0
    idx = {v: i for i, v in enumerate(sorted(adj))}
    big = len(adj) + 1
    # node 2i is the in-copy of vertex i, node 2i+1 the out-copy
    residual: List[Dict[int, int]] = [{} for _ in range(2 * len(adj))]

    def arc(a: int, b: int, c: int) -> None:
        residual[a][b] = residual[a].get(b, 0) + c
        residual[b].setdefault(a, 0)

    for v, i in idx.items():
        arc(2 * i, 2 * i + 1, big if v in (s, t) else 1)
    for v in adj:
        for w in adj[v]:
            arc(2 * idx[v] + 1, 2 * idx[w], big)

    source, sink = 2 * idx[s] + 1, 2 * idx[t]
    value = 0
    while value < limit:
        prev: Dict[int, int] = {source: source}
        queue: Deque[int] = deque([source])
        while queue and sink not in prev:
            a = queue.popleft()
            for b, c in residual[a].items():
                if c > 0 and b not in prev:
                    prev[b] = a
                    queue.append(b)
        if sink not in prev:
            break
        node = sink
        while node != source:
            above = prev[node]
            residual[above][node] -= 1
            residual[node][above] += 1
            node = above
        value += 1
    return value


def _is_connected(adj: Dict[int, Set[int]]) -> bool:
    if not adj:
        return True
    start = next(iter(adj))
    seen = {start}
    stack = [start]
    while stack:
        v = stack.pop()
        for w in adj[v]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == len(adj)


def vertex_connectivity(graph: ColouredGraph,
                        vertices: Optional[Iterable[int]] = None) -> int:
    """Exact vertex connectivity of the graph, or of an induced subgraph.

    The minimum is taken over a small candidate family anchored at a
    minimum-degree vertex v: local connectivities from v to each of its
    non-neighbours, and between non-adjacent pairs inside N(v).  Any
    minimum cut either misses v (first family) or contains it, in which
    case it separates two of v's neighbours (second family).  Complete
    graphs are |V| - 1 by convention, single vertices and disconnected
    graphs 0.
    """
    adj = _adjacency(graph, vertices)
    n = len(adj)
    if n <= 1:
        return 0
    if not _is_connected(adj):
        return 0
    if all(len(adj[v]) == n - 1 for v in adj):
        return n - 1
    v = min(sorted(adj), key=lambda x: len(adj[x]))
    best = len(adj[v])
    for u in sorted(adj):
        if u != v and u not in adj[v]:
            best = min(best, _local_connectivity(adj, v, u, cap=best))
    for x, y in itertools.combinations(sorted(adj[v]), 2):
        if y not in adj[x]:
            best = min(best, _local_connectivity(adj, x, y, cap=best))
    return best


def is_k_connected(graph: ColouredGraph, k: int,
                   vertices: Optional[Iterable[int]] = None) -> bool:
    """Whether the (induced) graph is k-connected, with capped flows.

    Witness-set test: fix k vertices; a cut of fewer than k vertices
    misses one of them, which then sits in a different component from
    some non-neighbour.  All flows stop at k units, so the check stays
    cheap when k is small even on large blocks.
    """
    if k <= 0:
        return True
    adj = _adjacency(graph, vertices)
    n = len(adj)
    if n <= k:
        return False
    if not _is_connected(adj):
        return False
    if min(len(adj[v]) for v in adj) < k:
        return False
    anchors = sorted(adj)[:k]
    for a in anchors:
        for u in sorted(adj):
            if u != a and u not in adj[a]:
                if _local_connectivity(adj, a, u, cap=k) < k:
                    return False
    return True


# ---------------------------------------------------------------------------
# the highly connected partition


def _components(adj: Dict[int, Set[int]]) -> List[List[int]]:
    comps: List[List[int]] = []
    left = set(adj)
    while left:
        start = min(left)
        comp = {start}
        stack = [start]
        while stack:
            v = stack.pop()
            for w in adj[v]:
                if w not in comp:
                    comp.add(w)
                    stack.append(w)
        comps.append(sorted(comp))
        left -= comp
    comps.sort(key=lambda c: (len(c), c))
    return comps


def _split_block(graph: ColouredGraph, block: FrozenSet[int],
                 threshold: int) -> Optional[Tuple[FrozenSet[int],
                                                   FrozenSet[int]]]:
    """One splitting step, or None when the block needs no further work.

    A disconnected block sheds its smallest component (ties broken by
    vertex order); a block with a vertex cut below the threshold splits
    into cut-plus-smaller-side against the rest.  Complete and single
    vertex blocks cannot split and are left to the final audit.

    Cut hunting is the witness-pair test again, run entirely through
    networkx flows so the construction stays independent of the audit:
    a cut of fewer than `threshold` vertices misses one of the first
    `threshold` anchors, which then has a non-neighbour across the cut,
    and the minimum cut for that pair is itself below the threshold.
    The splitting argument needs some cut below the threshold, not a
    globally minimum one, so the first such pair cut is used.
    """
    if len(block) <= 1:
        return None
    adj = _adjacency(graph, block)
    if not _is_connected(adj):
        first = frozenset(_components(adj)[0])
        return first, block - first
    if all(len(adj[v]) == len(block) - 1 for v in adj):
        return None
    if threshold <= 1:
        return None
    h = nx.Graph()
    h.add_nodes_from(sorted(block))
    h.add_edges_from(sorted((u, v) for u, v in graph.edges
                            if u in block and v in block))
    aux = build_auxiliary_node_connectivity(h)
    res = build_residual_network(aux, "capacity")
    for a in sorted(block)[:threshold]:
        for u in sorted(block):
            if u == a or u in adj[a]:
                continue
            k_au = local_node_connectivity(h, a, u, auxiliary=aux,
                                           residual=res, cutoff=threshold)
            if k_au >= threshold:
                continue
            cut = frozenset(minimum_st_node_cut(h, a, u, auxiliary=aux,
                                                residual=res))
            sides = _components(_adjacency(graph, block - cut))
            small = frozenset(sides[0]) | cut
            return small, block - small
    return None


def highly_connected_partition(graph: ColouredGraph, k: int
                               ) -> VertexPartition:
    """Partition the vertices into blocks that induce ceil(k^2/(16n))
    connected subgraphs of at least k/8 vertices each.

    Requires minimum degree at least k > 0.  Blocks with a small vertex
    cut are split along a minimum cut, the cut joining the smaller side,
    until every block clears the threshold.  The outcome is audited with
    the in-module flow-based connectivity check and the size floor; a
    violation there is a bug, not a sample failure, hence plain asserts.
    """
    if k <= 0:
        raise ParameterError("k must be positive, got %r" % k)
    if graph.min_degree() < k:
        raise ParameterError("minimum degree %d is below k=%d"
                             % (graph.min_degree(), k))
    n = graph.order
    threshold = int(math.ceil(k * k / (16.0 * n)))
    done: List[FrozenSet[int]] = []
    todo: List[FrozenSet[int]] = [frozenset(graph.vertex_set)]
    while todo:
        block = todo.pop()
        split = _split_block(graph, block, threshold)
        if split is None:
            done.append(block)
        else:
            todo.extend(split)

    partition = partition_from_lists(done)
    partition.validate(graph.vertex_set)
    for block in partition.blocks:
        assert len(block) >= k / 8.0, \
            "block of %d vertices is below the size floor %.2f" \
            % (len(block), k / 8.0)
        assert is_k_connected(graph, threshold, block), \
            "a block misses the connectivity threshold %d" % threshold
    return partition


# ---------------------------------------------------------------------------
# the partition criterion


def _growth_strings(n: int):
    """All restricted growth strings of length n (one per set partition)."""
    code = [0] * n
    maxes = [0] * n
    while True:
        yield code
        i = n - 1
        while i > 0 and code[i] == maxes[i - 1] + 1:
            i -= 1
        if i == 0:
            return
        code[i] += 1
        maxes[i] = max(maxes[i - 1], code[i])
        for j in range(i + 1, n):
            code[j] = 0
            maxes[j] = maxes[i]


SUZUKI_BUDGET = 12


def suzuki_check(graph: ColouredGraph
                 ) -> Tuple[bool, Optional[VertexPartition]]:
    """Exact partition criterion for rainbow spanning trees.

    True iff every partition of the vertex set into s >= 2 parts sees at
    least s - 1 distinct colours on its crossing edges; on failure the
    second component is a violating partition.  Enumerates all set
    partitions by growth strings, so the order is capped at 12.
    """
    if not graph.is_coloured:
        raise ParameterError("the criterion needs an edge-coloured graph")
    verts = sorted(graph.vertex_set)
    n = len(verts)
    if n > SUZUKI_BUDGET:
        raise ParameterError(
            "exact criterion enumerates set partitions; order %d exceeds "
            "the budget %d" % (n, SUZUKI_BUDGET))
    if n <= 1:
        return True, None
    pos = {v: i for i, v in enumerate(verts)}
    edges = [(pos[u], pos[v], c) for (u, v), c in graph.colouring.items()]
    for code in _growth_strings(n):
        s = max(code) + 1
        if s < 2:
            continue
        colours: Set[int] = set()
        for iu, iv, c in edges:
            if code[iu] != code[iv]:
                colours.add(c)
                if len(colours) >= s - 1:
                    break
        if len(colours) < s - 1:
            blocks: List[List[int]] = [[] for _ in range(s)]
            for i, b in enumerate(code):
                blocks[b].append(verts[i])
            return False, partition_from_lists(blocks)
    return True, None


# ---------------------------------------------------------------------------
# constructive finder (matroid intersection)


def _forest_components(tree_adj: Dict[int, Set[int]],
                       verts: Sequence[int]) -> Dict[int, int]:
    comp: Dict[int, int] = {}
    label = 0
    for start in verts:
        if start in comp:
            continue
        comp[start] = label
        stack = [start]
        while stack:
            v = stack.pop()
            for w in tree_adj[v]:
                if w not in comp:
                    comp[w] = label
                    stack.append(w)
        label += 1
    return comp


def find_rainbow_spanning_tree(graph: ColouredGraph
                               ) -> Optional[FrozenSet[Pair]]:
    """A rainbow spanning tree of the coloured graph, or None.

    Exact: a tree is returned if and only if one exists.  The edge set
    of a rainbow spanning tree is a largest common independent set of
    the cycle matroid and the one-edge-per-colour partition matroid; a
    greedy rainbow forest seeds the search and exchange augmentation
    grows it, one shortest alternating path at a time, until it spans
    or provably cannot.
    """
    if not graph.is_coloured:
        raise ParameterError("a rainbow tree needs an edge-coloured graph")
    verts = sorted(graph.vertex_set)
    n = len(verts)
    if n == 0:
        raise ParameterError("spanning tree of an empty graph")
    if n == 1:
        return frozenset()

    if not _is_connected(_adjacency(graph)):
        return None

    colour_of = graph.colouring
    all_edges = sorted(colour_of)

    # greedy warm start: scan the edges once and keep anything joining
    # two components on a fresh colour
    tree_adj: Dict[int, Set[int]] = {v: set() for v in verts}
    in_tree: Set[Pair] = set()
    colour_used: Dict[int, Pair] = {}
    parent = {v: v for v in verts}

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for e in all_edges:
        c = colour_of[e]
        if c in colour_used:
            continue
        ru, rv = find(e[0]), find(e[1])
        if ru == rv:
            continue
        parent[ru] = rv
        in_tree.add(e)
        colour_used[c] = e
        tree_adj[e[0]].add(e[1])
        tree_adj[e[1]].add(e[0])

    while len(in_tree) < n - 1:
        if not _augment(verts, all_edges, colour_of, in_tree, tree_adj,
                        colour_used):
            return None

    tree = frozenset(in_tree)
    # spanning, connected, acyclic, rainbow: checked directly
    assert len(tree) == n - 1
    comp = _forest_components(tree_adj, verts)
    assert len(set(comp.values())) == 1, "tree does not span"
    assert sum(len(tree_adj[v]) for v in verts) == 2 * (n - 1), \
        "edge bookkeeping out of sync"
    assert len({colour_of[e] for e in tree}) == len(tree), "not rainbow"
    return tree


def _augment(verts: Sequence[int], all_edges: Sequence[Pair],
             colour_of: Dict[Pair, int], in_tree: Set[Pair],
             tree_adj: Dict[int, Set[int]],
             colour_used: Dict[int, Pair]) -> bool:
    """One exchange augmentation; False means the forest is maximum.

    Nodes of the search are edges.  Out-of-forest edges joining two
    forest components are the sources, out-of-forest edges of an unused
    colour the sinks.  From an out-edge the walk may step to the forest
    edge holding its colour; from a forest edge to any out-edge that
    reconnects the two sides its removal leaves behind.  Breadth-first
    order keeps the path shortest, which is what makes the exchange
    valid in both matroids at once.
    """
    comp = _forest_components(tree_adj, verts)
    sources = [e for e in all_edges
               if e not in in_tree and comp[e[0]] != comp[e[1]]]
    if not sources:
        return False

    # out-edges internal to a component, bucketed for the inner scan
    internal: Dict[int, List[Pair]] = {}
    for e in all_edges:
        if e not in in_tree and comp[e[0]] == comp[e[1]]:
            internal.setdefault(comp[e[0]], []).append(e)

    prev: Dict[Pair, Optional[Pair]] = {e: None for e in sources}
    queue: Deque[Tuple[Pair, bool]] = deque((e, False) for e in sources)
    goal: Optional[Pair] = None
    while queue:
        edge, inside = queue.popleft()
        if not inside:
            c = colour_of[edge]
            if c not in colour_used:
                goal = edge
                break
            mate = colour_used[c]
            if mate not in prev:
                prev[mate] = edge
                queue.append((mate, True))
        else:
            a, b = edge
            side: Set[int] = {a}
            stack = [a]
            while stack:
                x = stack.pop()
                for y in tree_adj[x]:
                    if x == a and y == b:
                        continue
                    if y not in side:
                        side.add(y)
                        stack.append(y)
            for e in internal.get(comp[a], ()):
                if e not in prev and (e[0] in side) != (e[1] in side):
                    prev[e] = edge
                    queue.append((e, False))
    if goal is None:
        return False

    # flip along the path: out-edges enter the forest, forest edges leave
    node: Optional[Pair] = goal
    inside = False
    while node is not None:
        if inside:
            in_tree.discard(node)
            tree_adj[node[0]].discard(node[1])
            tree_adj[node[1]].discard(node[0])
        else:
            in_tree.add(node)
            tree_adj[node[0]].add(node[1])
            tree_adj[node[1]].add(node[0])
        node = prev[node]
        inside = not inside
    colour_used.clear()
    for e in in_tree:
        colour_used[colour_of[e]] = e
    return True


# ---------------------------------------------------------------------------
# crossing-edge supply


def check_crossing_edges(graph: ColouredGraph, partition: VertexPartition,
                         t: int) -> bool:
    """Whether every pair of blocks has at least 2t crossing edges."""
    partition.validate(graph.vertex_set)
    if partition.t < 2:
        return True
    owner: Dict[int, int] = {}
    for b, block in enumerate(partition.blocks):
        for v in block:
            owner[v] = b
    counts: Dict[Pair, int] = {}
    for u, v in graph.edges:
        bu, bv = owner[u], owner[v]
        if bu != bv:
            key = (bu, bv) if bu < bv else (bv, bu)
            counts[key] = counts.get(key, 0) + 1
    need = 2 * t
    for i in range(partition.t):
        for j in range(i + 1, partition.t):
            if counts.get((i, j), 0) < need:
                return False
    return True
