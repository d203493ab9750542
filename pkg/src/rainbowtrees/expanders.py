"""Expansion predicates, effective expanders, degradation, sparsification.

A graph is an (eta, r)-expander when every vertex set X with
|X| <= floor(eta * n) has an external neighbourhood of size at least
r * |X|.  An effective expander is a large subgraph whose degrees sit in
the band [C, 10C] and whose dense cores all expand; the sparsifier turns
a vertex block into a small rainbow graph whose law, conditioned on
success, is uniform over graphs with the requested edge count.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ExpanderFailure, ParameterError, SparsifyFailure
from .graphs import ColouredGraph, _pairs_from_indices, _skip_sample_indices, \
    _sweep_sample_indices
from .rng import RandomSource

E4 = math.exp(4.0)

EXACT_SUBSET_LIMIT = 24
EXACT_CORE_LIMIT = 18


def ell1(r: int, C: float) -> float:
    """Minimum-degree threshold for the core-expansion requirement."""
    if C <= 1.0:
        raise ParameterError("degree scale must exceed 1, got %r" % C)
    return 2.0 * E4 * r * r * math.log(C)


def ell2(eta: float, d: int, k: float) -> float:
    """Size threshold below which rooted trees embed into expanders."""
    if not 0.0 < eta < 2.0:
        raise ParameterError("eta must lie in (0, 2), got %r" % eta)
    if k <= 0:
        raise ParameterError("k must be positive, got %r" % k)
    return eta * k / (40.0 * d * d * math.log(2.0 / eta))


@dataclass(frozen=True)
class ExpandParams:
    """Parameter tuple for the effective-expander family."""

    theta: float
    C: float
    eta: float
    r: int

    def __post_init__(self):
        if not 0.0 < self.theta < 0.5:
            raise ParameterError("theta must lie in (0, 1/2), got %r" % self.theta)
        if int(self.r) != self.r or self.r < 3:
            raise ParameterError("r must be an integer >= 3, got %r" % self.r)
        if not 0.0 < self.eta <= 1.0 / (self.r + 2):
            raise ParameterError("eta must lie in (0, 1/(r+2)], got %r" % self.eta)
        if self.C <= 1.0:
            raise ParameterError("C must exceed 1, got %r" % self.C)

    @property
    def ell1(self) -> float:
        return ell1(self.r, self.C)


@dataclass(frozen=True)
class EmbedThreshold:
    """Embedding-size threshold bundle."""

    eta: float
    d: int
    k: float

    def __post_init__(self):
        if not 0.0 < self.eta < 0.5:
            raise ParameterError("eta must lie in (0, 1/2), got %r" % self.eta)
        if self.d < 2:
            raise ParameterError("d must be >= 2, got %r" % self.d)
        if self.k <= 0:
            raise ParameterError("k must be positive, got %r" % self.k)

    @property
    def ell2(self) -> float:
        return ell2(self.eta, self.d, self.k)


@dataclass(frozen=True)
class ExpansionCheck:
    """Outcome of an expansion check.

    `certified` is True only when every qualifying set was enumerated; a
    sampled pass is evidence, not a certificate.  A False outcome always
    carries a violating witness set, so refutations are certified in
    either mode.
    """

    is_expander: bool
    certified: bool
    witness: Optional[FrozenSet[int]]
    sets_checked: int


def _bit_adjacency(graph: ColouredGraph) -> Tuple[List[int], List[int]]:
    verts = sorted(graph.vertex_set)
    pos = {v: i for i, v in enumerate(verts)}
    masks = [0] * len(verts)
    for u, v in graph.edges:
        masks[pos[u]] |= 1 << pos[v]
        masks[pos[v]] |= 1 << pos[u]
    return verts, masks


def is_eta_r_expander(graph: ColouredGraph, eta: float, r: int,
                      mode: str = "exact", trials: int = 400,
                      source: Optional[RandomSource] = None,
                      size_cap: Optional[int] = None) -> ExpansionCheck:
    """Check |Γ(X)| >= r|X| for every X with |X| <= floor(eta * n).

    Exact mode enumerates every qualifying X (n <= 24).  Sampled mode
    draws `trials` uniform sets of each qualifying size; a True outcome
    is then one-sided.  `size_cap` overrides the set-size bound, which
    callers use when eta should be read against an ambient graph larger
    than this one.
    """
    n = graph.order
    if eta <= 0.0:
        raise ParameterError("eta must be positive, got %r" % eta)
    if r < 1:
        raise ParameterError("r must be >= 1, got %r" % r)
    cap = int(math.floor(eta * n + 1e-9)) if size_cap is None else int(size_cap)
    cap = min(cap, n)
    if cap < 1:
        return ExpansionCheck(True, True, None, 0)
    verts, masks = _bit_adjacency(graph)

    if mode == "exact":
        if n > EXACT_SUBSET_LIMIT:
            raise ParameterError("exact expander check supports n <= %d, got %d"
                                 % (EXACT_SUBSET_LIMIT, n))
        checked = 0
        for size in range(1, cap + 1):
            need = r * size
            for combo in itertools.combinations(range(n), size):
                xmask = 0
                gamma = 0
                for i in combo:
                    xmask |= 1 << i
                    gamma |= masks[i]
                checked += 1
                if (gamma & ~xmask).bit_count() < need:
                    return ExpansionCheck(
                        False, True, frozenset(verts[i] for i in combo), checked)
        return ExpansionCheck(True, True, None, checked)

    if mode != "sampled":
        raise ParameterError("mode must be 'exact' or 'sampled', got %r" % mode)
    if source is None:
        raise ParameterError("sampled mode needs a RandomSource")
    gen = source.generator()
    checked = 0
    for size in range(1, cap + 1):
        need = r * size
        for _ in range(trials):
            combo = gen.choice(n, size=size, replace=False)
            xmask = 0
            gamma = 0
            for i in combo:
                xmask |= 1 << int(i)
                gamma |= masks[int(i)]
            checked += 1
            if (gamma & ~xmask).bit_count() < need:
                return ExpansionCheck(
                    False, False, frozenset(verts[int(i)] for i in combo), checked)
    return ExpansionCheck(True, False, None, checked)


def _qualifying_subsets(graph: ColouredGraph, min_deg: float) -> List[int]:
    """Bitmasks of the nonempty induced subgraphs with min degree >= min_deg.

    Vectorized sweep over all 2^n subsets; positions refer to the sorted
    vertex list.
    """
    verts, masks = _bit_adjacency(graph)
    n = len(verts)
    if n > EXACT_CORE_LIMIT:
        raise ParameterError("exact core enumeration supports n <= %d, got %d"
                             % (EXACT_CORE_LIMIT, n))
    subsets = np.arange(1, 1 << n, dtype=np.uint32)
    lowest = np.full(subsets.shape, 255, dtype=np.uint8)
    for i in range(n):
        deg = np.bitwise_count(subsets & np.uint32(masks[i])).astype(np.uint8)
        member = ((subsets >> np.uint32(i)) & np.uint32(1)).astype(bool)
        lowest = np.where(member, np.minimum(lowest, deg), lowest)
    keep = subsets[lowest >= min_deg]
    return [int(s) for s in keep]


def verify_expand_core(graph: ColouredGraph, ell1_value: float, eta: float,
                       r: int, mode: str = "exact", trials: int = 200,
                       source: Optional[RandomSource] = None) -> ExpansionCheck:
    """Check that every induced subgraph with min degree >= ell1_value is an
    (eta, r)-expander, with set sizes capped by floor(eta * v(graph)).

    Exact mode (n <= 18) enumerates all qualifying subgraphs.  Sampled
    mode strips the graph to its ceil(ell1)-core and expansion-checks it,
    plus the cores of random induced subgraphs.
    """
    n = graph.order
    cap = int(math.floor(eta * n + 1e-9))
    if cap < 1:
        return ExpansionCheck(True, mode == "exact", None, 0)
    verts = sorted(graph.vertex_set)

    if mode == "exact":
        subsets = _qualifying_subsets(graph, ell1_value)
        checked = 0
        for smask in subsets:
            nodes = [verts[i] for i in range(n) if (smask >> i) & 1]
            sub = graph.subgraph(nodes)
            res = is_eta_r_expander(sub, eta, r, mode="exact", size_cap=cap)
            checked += res.sets_checked
            if not res.is_expander:
                return ExpansionCheck(False, True, res.witness, checked)
        return ExpansionCheck(True, True, None, checked)

    if mode != "sampled":
        raise ParameterError("mode must be 'exact' or 'sampled', got %r" % mode)
    if source is None:
        raise ParameterError("sampled mode needs a RandomSource")
    gen = source.generator()
    checked = 0
    threshold = math.ceil(ell1_value - 1e-9)
    targets: List[FrozenSet[int]] = []
    core = _graph_core(graph, threshold)
    if core:
        targets.append(core)
    for _ in range(8):
        if n < 2:
            break
        want = int(gen.integers(max(1, n // 2), n + 1))
        sample = gen.choice(n, size=want, replace=False)
        sub_core = _graph_core(graph.subgraph([verts[int(i)] for i in sample]),
                               threshold)
        if sub_core and sub_core not in targets:
            targets.append(sub_core)
    for t_idx, nodes in enumerate(targets):
        res = is_eta_r_expander(graph.subgraph(nodes), eta, r, mode="sampled",
                                trials=trials,
                                source=source.substream(("core", t_idx)),
                                size_cap=cap)
        checked += res.sets_checked
        if not res.is_expander:
            return ExpansionCheck(False, False, res.witness, checked)
    return ExpansionCheck(True, False, None, checked)


def _graph_core(graph: ColouredGraph, threshold: int) -> FrozenSet[int]:
    """The maximal vertex set whose induced subgraph has min degree >= threshold."""
    alive = set(graph.vertex_set)
    adj = {v: set(graph.adjacency()[v]) for v in alive}
    changed = True
    while changed:
        changed = False
        for v in list(alive):
            if len(adj[v]) < threshold:
                alive.remove(v)
                for u in adj[v]:
                    adj[u].discard(v)
                adj.pop(v)
                changed = True
    return frozenset(alive)


@dataclass(frozen=True)
class EffectiveExpander:
    """A successfully extracted effective expander with its audit trail."""

    subgraph: ColouredGraph
    deleted: FrozenSet[int]
    capped_edges: FrozenSet[Tuple[int, int]]
    core_check: ExpansionCheck


def find_effective_expander(graph: ColouredGraph, params: ExpandParams,
                            mode: str = "sampled", trials: int = 200,
                            source: Optional[RandomSource] = None) -> EffectiveExpander:
    """Peel and cap `graph` into the degree band [C, 10C] and verify that
    its dense cores expand.

    Failure raises ExpanderFailure, with detail item 1 (too many vertices
    peeled), 2 (degree band unsatisfiable: nothing left), or 3 (a core
    failed the expansion check); these feed trial statistics.
    """
    lo = params.C
    hi = math.floor(10.0 * params.C + 1e-9)
    alive = set(graph.vertex_set)
    adj = {v: set(graph.adjacency()[v]) for v in alive}
    capped: List[Tuple[int, int]] = []

    stable = False
    while not stable:
        stable = True
        # peel below the band
        drop = [v for v in alive if len(adj[v]) < lo]
        while drop:
            stable = False
            for v in drop:
                alive.remove(v)
                for u in adj[v]:
                    adj[u].discard(v)
                adj.pop(v)
            drop = [v for v in alive if len(adj[v]) < lo]
        # cap above the band, shedding highest-index neighbours first
        for v in sorted(alive):
            if len(adj[v]) > hi:
                stable = False
                for u in sorted(adj[v], reverse=True):
                    if len(adj[v]) <= hi:
                        break
                    adj[v].remove(u)
                    adj[u].remove(v)
                    capped.append((min(u, v), max(u, v)))

    if not alive:
        raise ExpanderFailure(
            "degree band [%g, %d] unsatisfiable: peeling removed every vertex"
            % (lo, hi), detail={"item": 2, "deleted": graph.order})
    deleted = graph.vertex_set - alive
    budget = params.theta * graph.order
    if len(deleted) > budget + 1e-9:
        raise ExpanderFailure(
            "peeled %d vertices, above the budget %.2f"
            % (len(deleted), budget), detail={"item": 1, "deleted": len(deleted)})

    edges = {(min(u, v), max(u, v)) for u in alive for v in adj[u] if u < v}
    sub = ColouredGraph(graph.n, edges, vertex_set=alive)
    assert sub.min_degree() >= lo and sub.max_degree() <= hi

    core = verify_expand_core(sub, params.ell1, params.eta, params.r,
                              mode=mode, trials=trials, source=source)
    if not core.is_expander:
        raise ExpanderFailure(
            "a dense core failed the (%g, %d) expansion check"
            % (params.eta, params.r),
            detail={"item": 3, "witness": sorted(core.witness or ())})
    return EffectiveExpander(subgraph=sub, deleted=frozenset(deleted),
                             capped_edges=frozenset(capped), core_check=core)


def degrade_attach(graph: ColouredGraph, new_vertex: int,
                   attach_edges: Iterable[Tuple[int, int]], d: int) -> ColouredGraph:
    """Attach a well-connected new vertex to an expander.

    The caller contract: if every induced subgraph of `graph` with min
    degree >= k is a (1/(2d+1), d+2)-expander, the same subgraphs of the
    output are (1/(2d+2), d+1)-expanders.  The attachment degree must be
    at least (d+2)^2 for that trade to hold.
    """
    edges = [(min(u, v), max(u, v)) for u, v in attach_edges]
    need = (d + 2) * (d + 2)
    if len(set(edges)) < need:
        raise ParameterError("attachment degree %d below (d+2)^2 = %d"
                             % (len(set(edges)), need))
    for u, v in edges:
        if new_vertex not in (u, v):
            raise ParameterError("attach edge (%d, %d) misses the new vertex"
                                 % (u, v))
        other = u if v == new_vertex else v
        if other not in graph.vertex_set:
            raise ParameterError("attach edge endpoint %d outside the graph" % other)
    if new_vertex in graph.vertex_set:
        raise ParameterError("vertex %d already present" % new_vertex)
    n = max(graph.n, new_vertex + 1)
    return ColouredGraph(n, set(graph.edges) | set(edges),
                         vertex_set=set(graph.vertex_set) | {new_vertex})


def sparsify(block: Iterable[int], p: float, palette_size: int,
             allowed: Iterable[int], m: int, source: RandomSource,
             n: Optional[int] = None,
             sample_out: Optional[dict] = None) -> ColouredGraph:
    """Random rainbow graph on `block` with exactly m edges.

    Steps, in order: include each pair with probability p; colour the
    included edges independently and uniformly from the full palette; for
    each allowed colour with a nonempty class keep one member uniformly;
    discard everything else (all other colours included); keep m of the
    survivors uniformly.  Fails, as a legitimate random outcome, exactly
    when fewer than m allowed colours appear among the survivors.

    When `sample_out` is a dict it receives the raw inclusion sample:
    "pairs" (every included pair, block labels) and "colours" (their
    colours), so a caller tracking edge exposure can record what this
    call revealed.  The draw itself is unchanged.
    """
    verts = sorted(set(int(v) for v in block))
    allowed_sorted = sorted(set(int(c) for c in allowed))
    if palette_size < 1:
        raise ParameterError("palette_size must be >= 1")
    if any(not 0 <= c < palette_size for c in allowed_sorted):
        raise ParameterError("allowed colours must lie in the palette")
    if not 0.0 <= p <= 1.0:
        raise ParameterError("p must lie in [0, 1], got %r" % p)
    if m < 0 or m > len(allowed_sorted):
        raise ParameterError("m=%d outside [0, |allowed|=%d]"
                             % (m, len(allowed_sorted)))
    if n is None:
        n = (verts[-1] + 1) if verts else 0
    k = len(verts)
    total = k * (k - 1) // 2
    gen = source.generator()

    # (S.1) presence
    if p < 0.1:
        ks = _skip_sample_indices(total, p, gen)
    else:
        ks = _sweep_sample_indices(total, p, gen)
    rows = _pairs_from_indices(k, ks)
    # (S.2) colours from the full palette
    cols = gen.integers(0, palette_size, size=len(rows))
    if sample_out is not None:
        sample_out["pairs"] = [(verts[int(i)], verts[int(j)]) for i, j in rows]
        sample_out["colours"] = [int(c) for c in cols]

    by_colour: Dict[int, List[int]] = {}
    for idx, c in enumerate(cols.tolist()):
        by_colour.setdefault(c, []).append(idx)

    # (S.3) one uniform representative per allowed colour; (S.4) drop the rest
    survivors: List[Tuple[int, int, int]] = []
    for c in allowed_sorted:
        bucket = by_colour.get(c)
        if not bucket:
            continue
        pick = bucket[int(gen.integers(0, len(bucket)))]
        i, j = int(rows[pick][0]), int(rows[pick][1])
        survivors.append((verts[i], verts[j], c))

    if len(survivors) < m:
        raise SparsifyFailure(
            "only %d allowed colours survived, needed %d" % (len(survivors), m),
            survivors=len(survivors), needed=m)

    # (S.5) uniform m-subset of the survivors
    chosen = gen.choice(len(survivors), size=m, replace=False) if m else []
    edges = {}
    for t in chosen:
        u, v, c = survivors[int(t)]
        edges[(u, v)] = c
    out = ColouredGraph(n, edges.keys(), edges, palette_size,
                        vertex_set=verts)
    assert out.size == m, "sparsify produced %d edges, wanted %d" % (out.size, m)
    assert out.is_rainbow(), "sparsify output must be rainbow"
    assert set(out.colouring.values()) <= set(allowed_sorted), \
        "sparsify leaked a colour outside the allowed set"
    return out
