"""Growing an almost-spanning rainbow tree to a spanning one.

The full-tree pipeline embeds a leaf-trimmed copy of the prescribed tree
into the random perturbation, relocates that copy with a uniformly
random relabelling of the vertex set, splits the dense seed graph (minus
every revealed random edge) into a few edge-disjoint slices with a
minimum-degree guarantee, and then re-attaches the trimmed leaves one at
a time.  Each re-attachment consults a pool of anchor vertices whose
tree neighbourhoods sit inside the right slice, reveals exactly the
colours it needs through the exposure oracle, and rewires the first
anchor whose revealed colours are fresh: the anchor's tree role moves to
the incoming vertex and the anchor itself becomes the new leaf.  The
slices exist so that every step can draw its colours from a slice whose
edges at the attachment vertex were never looked at before.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .embedding import (AlmostSpanningResult, _trace, derive_parameters,
                        embed_almost_spanning)
from .errors import (AbsorptionFailure, ParameterError, PartitionFailure,
                     StageFailure)
from .exposure import ExposureOracle
from .graphs import ColouredGraph, canonical_edge
from .rng import RandomSource
from .trees import Tree, TrimResult, build_I0, trim_to_size

Pair = Tuple[int, int]


# ---------------------------------------------------------------------------
# relabelling


@dataclass(frozen=True)
class ShiftedColouredGraph:
    """A coloured graph together with a relabelled copy of itself.

    `shifted` is `base` pushed through `perm`: the pair (u, v) becomes
    (perm[u], perm[v]) and keeps its colour.  Relabelling commutes with
    taking subgraphs, so any subgraph of the base is rainbow exactly when
    its image is.
    """

    base: ColouredGraph
    perm: Dict[int, int]
    shifted: ColouredGraph

    def validate(self) -> None:
        n = self.base.n
        assert set(self.perm) == set(range(n))
        assert set(self.perm.values()) == set(range(n))
        assert self.shifted.n == n
        moved = {canonical_edge(self.perm[u], self.perm[v]): c
                 for (u, v), c in self.base.colouring.items()}
        assert self.shifted.edges == frozenset(moved)
        for pair, c in moved.items():
            assert self.shifted.colouring[pair] == c, \
                "colour changed under relabelling at %r" % (pair,)


def draw_permutation(n: int, source: RandomSource) -> Dict[int, int]:
    """A uniformly random bijection of range(n), as an old -> new dict."""
    arr = source.generator().permutation(n)
    return {i: int(arr[i]) for i in range(n)}


def randomness_shift(base: ColouredGraph,
                     source: Optional[RandomSource] = None,
                     perm: Optional[Dict[int, int]] = None
                     ) -> ShiftedColouredGraph:
    """Relabel a coloured graph by a uniformly random permutation.

    The permutation is drawn from `source` unless an explicit bijection
    is supplied.  Colours travel with their pairs, so every subgraph and
    its image agree on rainbow-ness; only the location of the structure
    is re-randomized.
    """
    if not base.is_coloured:
        raise ParameterError("randomness shift needs a coloured graph")
    n = base.n
    if perm is None:
        if source is None:
            raise ParameterError("supply a RandomSource or an explicit "
                                 "permutation")
        perm = draw_permutation(n, source)
    else:
        perm = {int(k): int(v) for k, v in perm.items()}
        if (len(perm) != n or set(perm) != set(range(n))
                or set(perm.values()) != set(range(n))):
            raise ParameterError("perm must be a bijection of range(%d)" % n)
    moved = {canonical_edge(perm[u], perm[v]): c
             for (u, v), c in base.colouring.items()}
    shifted = ColouredGraph(n, list(moved), colouring=moved,
                            palette_size=base.palette_size,
                            vertex_set={perm[v] for v in base.vertex_set})
    out = ShiftedColouredGraph(base=base, perm=perm, shifted=shifted)
    out.validate()
    return out


# ---------------------------------------------------------------------------
# slicing the seed graph


def partition_edge_set(g_minus_r: ColouredGraph, d: int, delta: float,
                       source: RandomSource, *, retries: int = 50,
                       r_edges: Optional[Iterable[Pair]] = None
                       ) -> Tuple[ColouredGraph, ...]:
    """Split the edges into d slices, each with minimum degree delta*n/(2d).

    Every edge lands in a uniformly chosen slice; the draw is repeated
    (up to `retries` times) until all degree floors hold.  The input must
    already have minimum degree 0.9*delta*n, the floor that survives the
    removal of a sparse random graph from the seed; both the missing
    precondition and an exhausted retry budget raise PartitionFailure,
    which is a legitimate trial outcome rather than a bug.

    `r_edges`, when given, is the removed random edge set; the slices are
    checked to be disjoint from it.
    """
    if int(d) != d or d < 1:
        raise ParameterError("d must be a positive integer, got %r" % d)
    if not 0.0 < delta < 1.0:
        raise ParameterError("delta must lie in (0, 1), got %r" % delta)
    d = int(d)
    n = g_minus_r.n
    floor_pre = 0.9 * delta * n
    if g_minus_r.min_degree() + 1e-9 < floor_pre:
        raise PartitionFailure(
            "minimum degree %d is below the post-removal floor %.2f"
            % (g_minus_r.min_degree(), floor_pre),
            detail={"min_degree": g_minus_r.min_degree(),
                    "required": floor_pre})
    if r_edges is not None:
        overlap = g_minus_r.edges & frozenset(
            canonical_edge(int(u), int(v)) for u, v in r_edges)
        assert not overlap, \
            "input still contains %d removed random edges" % len(overlap)

    rows = g_minus_r.edge_array()
    bound = delta * n / (2.0 * d)
    gen = source.generator()
    for _ in range(max(1, retries)):
        labels = gen.integers(0, d, size=len(rows))
        ok = True
        for j in range(d):
            picked = rows[labels == j]
            degs = np.bincount(picked.ravel(), minlength=n) \
                if len(picked) else np.zeros(n, dtype=np.int64)
            if degs.min() + 1e-9 < bound:
                ok = False
                break
        if ok:
            return tuple(
                ColouredGraph(n, [(int(a), int(b)) for a, b in rows[labels == j]])
                for j in range(d))
    raise PartitionFailure(
        "no slicing met the degree floor %.2f in %d draws" % (bound, retries),
        detail={"bound": bound, "retries": retries})


# ---------------------------------------------------------------------------
# absorber pools


def compute_B(u: int, v: int, part: ColouredGraph, anchors: Iterable[int],
              image_tree: Tree) -> Tuple[int, ...]:
    """Anchors adjacent to u whose image-tree neighbours all neighbour v.

    Works on adjacency alone; no colour is revealed.  `image_tree` is the
    embedded tree on host labels, and the test against it always uses the
    original embedded copy, not the partially rewired one.
    """
    if u == v:
        raise ParameterError("pool endpoints must differ, got u = v = %d" % u)
    nu = set(part.neighbours(u))
    nv = set(part.neighbours(v))
    out = [x for x in set(int(a) for a in anchors)
           if x in nu and set(image_tree.neighbours(x)) <= nv]
    return tuple(sorted(out))


def b_size_bound(delta: float, d: int, n: int) -> float:
    """The guarantee floor (delta/(4d))^(d+1) * n / (5 d^2) for pool sizes."""
    return (delta / (4.0 * d)) ** (d + 1) * n / (5.0 * d * d)


@dataclass(frozen=True)
class BStatistics:
    """Empirical pool sizes over sampled (slice, u, v) triples."""

    samples: int
    minimum: int
    mean: float
    bound: float


def measure_B_statistics(parts: Sequence[ColouredGraph],
                         anchors: Iterable[int], image_tree: Tree,
                         delta: float,
                         source: Optional[RandomSource] = None,
                         samples: int = 200,
                         triples: Optional[Iterable[Tuple[int, int, int]]] = None
                         ) -> BStatistics:
    """Min and mean of pool sizes against the analytic floor.

    Triples are (slice index, u, v), sampled uniformly when not given
    explicitly.  Purely structural: nothing is exposed.
    """
    d = len(parts)
    if d < 1:
        raise ParameterError("at least one slice is required")
    n = parts[0].n
    anchors = tuple(int(a) for a in anchors)
    if triples is None:
        if source is None:
            raise ParameterError("sampling triples needs a RandomSource")
        gen = source.generator()
        drawn = []
        for _ in range(samples):
            j = int(gen.integers(d))
            u = int(gen.integers(n))
            v = int(gen.integers(n - 1))
            if v >= u:
                v += 1
            drawn.append((j, u, v))
        triples = drawn
    sizes = [len(compute_B(u, v, parts[j], anchors, image_tree))
             for j, u, v in triples]
    if not sizes:
        raise ParameterError("no triples to measure")
    return BStatistics(samples=len(sizes), minimum=min(sizes),
                       mean=sum(sizes) / len(sizes),
                       bound=b_size_bound(delta, d, n))


# ---------------------------------------------------------------------------
# absorption state


@dataclass
class AbsorberIndex:
    """Everything the absorption loop consults besides the tree itself.

    `i0_nodes` are the anchor tree nodes, `anchors` their host images,
    `parts` the edge-disjoint slices of the seed minus the random edges,
    `used` the absorbers consumed so far (in order), and `leftovers` the
    host vertices outside the embedded image, ascending; the k-th
    leftover is absorbed while the k-th trimmed leaf (in reverse trim
    order) rejoins the tree.
    """

    i0_nodes: Tuple[int, ...]
    anchors: Tuple[int, ...]
    parts: Tuple[ColouredGraph, ...]
    leftovers: Tuple[int, ...]
    used: List[int] = field(default_factory=list)

    def validate(self, g_minus_r: Optional[ColouredGraph] = None,
                 delta: Optional[float] = None,
                 image: Optional[FrozenSet[int]] = None) -> None:
        d = len(self.parts)
        assert d >= 1
        assert len(self.i0_nodes) == len(self.anchors)
        assert len(set(self.anchors)) == len(self.anchors)
        seen: set = set()
        for j, h in enumerate(self.parts):
            assert not (h.edges & seen), "slices share an edge"
            seen |= h.edges
        if g_minus_r is not None:
            assert seen <= g_minus_r.edges, \
                "slices contain edges outside the sliced graph"
            if delta is not None:
                floor = delta * g_minus_r.n / (2.0 * d)
                for h in self.parts:
                    assert h.min_degree() + 1e-9 >= floor, \
                        "a slice dropped below its degree floor"
        assert len(set(self.used)) == len(self.used)
        assert set(self.used) <= set(self.anchors), \
            "a used absorber is not an anchor"
        if image is not None:
            n = self.parts[0].n
            assert self.leftovers == tuple(sorted(set(range(n)) - set(image)))


class AbsorptionState:
    """Mutable record of the growing tree during absorption.

    `mapping` sends embedded tree nodes to host vertices, `edge_colours`
    carries the current image edges with their colours, and `t0_image`
    stays fixed at the originally embedded copy: the pool definition
    always refers to it.
    """

    def __init__(self, tree: Tree, t0_image: Tree, index: AbsorberIndex,
                 mapping: Dict[int, int], edge_colours: Dict[Pair, int],
                 oracle: ExposureOracle,
                 trace: Optional[List[str]] = None):
        self.tree = tree
        self.t0_image = t0_image
        self.index = index
        self.mapping = dict(mapping)
        self.inverse = {w: node for node, w in self.mapping.items()}
        assert len(self.inverse) == len(self.mapping), "image not injective"
        self.nodes = set(self.mapping)
        self.edge_colours = dict(edge_colours)
        self.colours = set(self.edge_colours.values())
        assert len(self.colours) == len(self.edge_colours), \
            "starting image is not rainbow"
        self.oracle = oracle
        self.i0_set = frozenset(index.i0_nodes)
        self.trace: List[str] = trace if trace is not None else []
        self.step = 0

    def check_image(self) -> None:
        """The image must be a rainbow copy of the currently covered subtree."""
        assert len(set(self.mapping.values())) == len(self.mapping)
        covered = [e for e in self.tree.edges
                   if e[0] in self.nodes and e[1] in self.nodes]
        assert len(covered) == len(self.nodes) - 1
        for a, b in covered:
            pair = canonical_edge(self.mapping[a], self.mapping[b])
            assert pair in self.edge_colours, \
                "tree edge (%d, %d) lost its image" % (a, b)
        assert len(self.edge_colours) == len(covered)
        assert len(self.colours) == len(self.edge_colours), \
            "image lost rainbow-ness"


def select_fresh_part(parts: Sequence[ColouredGraph], u: int,
                      oracle: ExposureOracle) -> int:
    """Index of the first slice with no revealed colour at vertex u.

    Raises a structural StageFailure when every slice has already been
    looked at around u; the slicing exists precisely to prevent that.
    """
    for j, h in enumerate(parts):
        if not any(oracle.colour_exposed((u, w)) for w in h.neighbours(u)):
            return j
    raise StageFailure(
        "absorption",
        "all %d slices carry exposed colours at vertex %d" % (len(parts), u),
        detail={"structural": True, "vertex": u})


def absorb_step(state: AbsorptionState, v: int, u_node: int, j_star: int,
                v_node: Optional[int] = None) -> str:
    """Absorb host vertex v while tree node v_node rejoins at u_node.

    Scans the anchor pool for (u, v) in slice j_star in ascending vertex
    order, revealing for each candidate x only the colour of the edge
    u-x and of the edges from v to x's image-tree neighbours.  The first
    candidate whose revealed colours are pairwise distinct and disjoint
    from the tree's colours wins: the tree node sitting at x moves to v
    (its incident image edges swing from x to v on the just-revealed
    colours), and v_node lands on x through the edge u-x.  Appends and
    returns a record line `i=<step> j*=<slice> |B|=<pool> chosen=<x|fail>`.

    Raises AbsorptionFailure when no candidate qualifies (a legitimate
    random outcome) and asserts on any contract violation.
    """
    tree, oracle = state.tree, state.oracle
    if u_node not in state.nodes:
        raise ParameterError("attachment node %r is not embedded" % (u_node,))
    if v in state.inverse:
        raise ParameterError("host vertex %d already carries a tree node" % v)
    pending = [w for w in tree.neighbours(u_node) if w not in state.nodes]
    if v_node is None:
        if len(pending) != 1:
            raise ParameterError(
                "attachment node %r has %d unembedded neighbours; pass the "
                "one to attach" % (u_node, len(pending)))
        v_node = pending[0]
    if v_node not in pending:
        raise ParameterError("node %r is not an unembedded neighbour of %r"
                             % (v_node, u_node))
    u = state.mapping[u_node]
    assert j_star == select_fresh_part(state.index.parts, u, oracle), \
        "j* must be the first colour-fresh slice at the attachment vertex"
    h = state.index.parts[j_star]

    # nothing in this slice incident to v and the current image may have
    # been revealed yet; absorption is the only consumer of these pairs
    for w in h.neighbours(v):
        if w in state.inverse:
            assert not oracle.colour_exposed((v, w)), \
                "slice %d colour at (%d, %d) leaked early" % (j_star, v, w)

    pool_full = compute_B(u, v, h, state.index.anchors, state.t0_image)
    used = set(state.index.used)
    pool = [x for x in pool_full if x not in used]
    assert len(pool) >= len(pool_full) - len(state.index.used)

    label = state.step + 1
    chosen = None
    kept: List[int] = []
    for x in pool:
        ys = sorted(state.t0_image.neighbours(x))
        pairs = [canonical_edge(u, x)] + [canonical_edge(y, v) for y in ys]
        cols = [oracle.expose_colour(q, kind="absorb", stage=label)
                for q in pairs]
        if len(set(cols) - state.colours) == len(cols):
            chosen = x
            kept = cols
            break
    if chosen is None:
        state.trace.append("i=%d j*=%d |B|=%d chosen=fail"
                           % (label, j_star + 1, len(pool)))
        raise AbsorptionFailure(
            "none of %d candidates had fresh colours for host vertex %d"
            % (len(pool), v), vertex=v,
            detail={"step": label, "pool": len(pool)})

    x = chosen
    z = state.inverse[x]
    assert z in state.i0_set, "absorber %d is not sitting on an anchor node" % x
    ys = sorted(state.t0_image.neighbours(x))
    # swing z's image edges from x onto v, then hang v_node on x
    for y in ys:
        state.edge_colours.pop(canonical_edge(x, y))
    for y, c in zip(ys, kept[1:]):
        assert h.has_edge(y, v)
        state.edge_colours[canonical_edge(y, v)] = c
    assert h.has_edge(u, x)
    state.edge_colours[canonical_edge(u, x)] = kept[0]
    state.mapping[z] = v
    state.mapping[v_node] = x
    state.inverse[x] = v_node
    state.inverse[v] = z
    state.nodes.add(v_node)
    state.colours = set(state.edge_colours.values())
    state.index.used.append(x)
    state.step += 1
    state.check_image()

    line = "i=%d j*=%d |B|=%d chosen=%d" % (label, j_star + 1, len(pool), x)
    state.trace.append(line)
    return line


# ---------------------------------------------------------------------------
# the spanning pipeline


@dataclass(frozen=True)
class SpanningResult:
    """Outcome of one spanning embedding run.

    On success `mapping` is a bijection from tree nodes onto all host
    vertices and `edge_colours` a rainbow colouring of the image.
    `eps_formula` is the trim fraction the analysis prescribes and
    `eps_used` the one actually applied (they differ when overridden);
    both always appear in the trace.  `r_max_degree` records the largest
    degree of the revealed random graph against the advisory cap
    `c * ln n`; breaching it is recorded, never fatal.
    """

    success: bool
    stage: Optional[str]
    detail: Optional[str]
    trace: Tuple[str, ...]
    mapping: Optional[Dict[int, int]]
    edge_colours: Dict[Pair, int]
    eps_formula: float
    eps_used: float
    r: int
    perm: Optional[Dict[int, int]]
    used_absorbers: Tuple[int, ...]
    r_max_degree: Optional[int]
    r_degree_ok: Optional[bool]
    almost: Optional[AlmostSpanningResult]
    oracle: Optional[ExposureOracle]


def _validate_spanning(state_mapping: Dict[int, int],
                       edge_colours: Dict[Pair, int], tree: Tree,
                       seed: ColouredGraph, oracle: ExposureOracle) -> None:
    n = seed.n
    assert len(state_mapping) == tree.m == n
    assert set(state_mapping.values()) == set(range(n))
    assert len(edge_colours) == n - 1
    assert len(set(edge_colours.values())) == n - 1, "image is not rainbow"
    for a, b in tree.edges:
        pair = canonical_edge(state_mapping[a], state_mapping[b])
        assert pair in edge_colours, \
            "tree edge (%r, %r) has no embedded image" % (a, b)
        assert pair in seed.edges or oracle.presence_of(pair), \
            "image edge %r lies outside the host" % (pair,)
        assert oracle.colour_of(pair) == edge_colours[pair]


def absorb_leftovers(seed: ColouredGraph, tree: Tree, trim: TrimResult,
                     almost: AlmostSpanningResult, delta: float, d: int,
                     eps_used: float, source: RandomSource, *,
                     c_ln: float = 3.0, eps_formula: Optional[float] = None,
                     base_trace: Optional[Sequence[str]] = None,
                     partition_retries: int = 50) -> SpanningResult:
    """Grow an embedded trimmed tree back to spanning size.

    Takes the almost-spanning outcome as-is (tests may hand-build one),
    reveals the rest of the random graph, relabels everything by a
    uniform permutation, slices the seed minus the random edges, and
    absorbs each host vertex outside the image while the trimmed leaves
    rejoin in reverse trim order.  Stage failures come back as results,
    never as exceptions.
    """
    n = seed.n
    r = len(trim.deleted)
    if eps_formula is None:
        eps_formula = eps_used
    trace: List[str] = list(base_trace or [])
    trace.extend(almost.trace)
    oracle = almost.oracle
    perm: Optional[Dict[int, int]] = None
    rmax: Optional[int] = None
    rok: Optional[bool] = None

    def failure(stage: str, detail: str) -> SpanningResult:
        return SpanningResult(
            success=False, stage=stage, detail=detail, trace=tuple(trace),
            mapping=None, edge_colours={}, eps_formula=eps_formula,
            eps_used=eps_used, r=r, perm=perm, used_absorbers=(),
            r_max_degree=rmax, r_degree_ok=rok, almost=almost, oracle=oracle)

    if not almost.success:
        return failure(almost.stage or "almost", almost.detail or "")
    mapping = dict(almost.embedding)
    edge_colours = dict(almost.edge_colours)

    if r == 0:
        # the trimmed tree already spans; nothing to absorb
        _validate_spanning(mapping, edge_colours, tree, seed, oracle)
        _trace(trace, "absorb", True, absorbed=0)
        return SpanningResult(
            success=True, stage=None, detail=None, trace=tuple(trace),
            mapping=mapping, edge_colours=edge_colours,
            eps_formula=eps_formula, eps_used=eps_used, r=0, perm=None,
            used_absorbers=(), r_max_degree=None, r_degree_ok=None,
            almost=almost, oracle=oracle)

    # reveal the full random edge set; its maximum degree is checked
    # against an advisory logarithmic cap and recorded either way
    r_edges = oracle.materialize_presence(kind="materialize", stage=0)
    degs = np.zeros(n, dtype=np.int64)
    for a, b in r_edges:
        degs[a] += 1
        degs[b] += 1
    rmax = int(degs.max()) if n else 0
    cap = c_ln * math.log(n) if n > 1 else float(c_ln)
    rok = rmax <= cap + 1e-9
    _trace(trace, "r-degree", rok, max=rmax, cap="%.2f" % cap)

    # relocate: the embedded copy moves to a uniformly random position
    perm = draw_permutation(n, source.substream("shift"))
    oracle.apply_permutation(perm)
    mapping = {node: perm[w] for node, w in mapping.items()}
    edge_colours = {canonical_edge(perm[a], perm[b]): c
                    for (a, b), c in edge_colours.items()}
    r_edges = oracle.presence_edges()
    _trace(trace, "shift", True, edges=len(r_edges))

    t0_image = Tree((mapping[x] for x in trim.t0.nodes),
                    ((mapping[a], mapping[b]) for a, b in trim.t0.edges), d)
    try:
        i0 = build_I0(trim.t0, tree, d, eps_used)
    except StageFailure as exc:
        _trace(trace, exc.stage, False, detail=str(exc.detail))
        return failure(exc.stage, str(exc))
    anchors = tuple(mapping[x] for x in i0)
    _trace(trace, "anchors", True, count=len(anchors))

    g_minus_r = seed.without_edges(r_edges)
    try:
        parts = partition_edge_set(g_minus_r, d, delta,
                                   source.substream("partition"),
                                   retries=partition_retries, r_edges=r_edges)
    except PartitionFailure as exc:
        _trace(trace, "partition", False, detail=str(exc.detail))
        return failure(exc.stage, str(exc))
    _trace(trace, "partition", True, parts=len(parts),
           min_degree=min(h.min_degree() for h in parts))

    leftovers = tuple(sorted(set(range(n)) - set(mapping.values())))
    index = AbsorberIndex(i0_nodes=tuple(i0), anchors=anchors, parts=parts,
                          leftovers=leftovers)
    index.validate(g_minus_r=g_minus_r, delta=delta,
                   image=frozenset(mapping.values()))
    state = AbsorptionState(tree, t0_image, index, mapping, edge_colours,
                            oracle, trace=trace)
    rejoin = tuple(reversed(trim.deleted))
    assert len(rejoin) == len(leftovers) == r
    try:
        for k in range(r):
            v_node = rejoin[k]
            hooks = [w for w in tree.neighbours(v_node) if w in state.nodes]
            assert len(hooks) == 1, "reverse trim must attach a leaf"
            j_star = select_fresh_part(index.parts, state.mapping[hooks[0]],
                                       oracle)
            absorb_step(state, leftovers[k], hooks[0], j_star, v_node)
    except StageFailure as exc:
        return failure(exc.stage, str(exc))

    _validate_spanning(state.mapping, state.edge_colours, tree, seed, oracle)
    _trace(trace, "absorb", True, absorbed=r)
    return SpanningResult(
        success=True, stage=None, detail=None, trace=tuple(trace),
        mapping=dict(state.mapping), edge_colours=dict(state.edge_colours),
        eps_formula=eps_formula, eps_used=eps_used, r=r, perm=perm,
        used_absorbers=tuple(index.used), r_max_degree=rmax, r_degree_ok=rok,
        almost=almost, oracle=oracle)


def embed_spanning(seed: ColouredGraph, p: float, tree: Tree, delta: float,
                   alpha: float, d: int, source: RandomSource, *,
                   eps_override: Optional[float] = None, c_ln: float = 3.0,
                   derive_kwargs: Optional[Dict] = None,
                   check_mode: str = "sampled", check_trials: int = 60,
                   embed_budget: Optional[int] = None,
                   partition_retries: int = 50) -> SpanningResult:
    """Embed `tree` as a rainbow spanning tree of the perturbed host.

    The trim fraction defaults to (delta/(4d))^(d+1) / (10 d^2), which is
    far below one leftover vertex at desk scale; `eps_override` makes the
    absorption phase observable and both values are logged.  A zero
    leftover count reduces the run to the almost-spanning pipeline on the
    whole tree.  `derive_kwargs` tunes the trimmed-tree embedding stage;
    the default picks a narrow block slack so the blocks of a nearly
    spanning forest still fit disjointly.

    Parameter violations raise; stage failures are returned as results.
    """
    n = seed.n
    if tree.m != n:
        raise ParameterError("tree order %d must equal host order %d"
                             % (tree.m, n))
    if tree.max_degree() > d:
        raise ParameterError("tree max degree %d exceeds d=%d"
                             % (tree.max_degree(), d))
    if int(d) != d or d < 2:
        raise ParameterError("d must be an integer >= 2, got %r" % d)
    if not 0.0 < delta < 1.0:
        raise ParameterError("delta must lie in (0, 1), got %r" % delta)
    if alpha < 0.0:
        raise ParameterError("alpha must be nonnegative, got %r" % alpha)
    if not 0.0 <= p <= 1.0:
        raise ParameterError("p must lie in [0, 1], got %r" % p)
    if seed.vertex_set != frozenset(range(n)):
        raise ParameterError("seed must live on its full label space")
    if seed.min_degree() + 1e-9 < delta * n:
        raise ParameterError("seed minimum degree %d is below delta*n = %.2f"
                             % (seed.min_degree(), delta * n))

    eps_formula = (delta / (4.0 * d)) ** (d + 1) / (10.0 * d * d)
    eps_used = eps_formula if eps_override is None else float(eps_override)
    if not 0.0 < eps_used < 1.0:
        raise ParameterError("trim fraction must lie in (0, 1), got %r"
                             % eps_used)
    r = int(math.floor(eps_used * n + 1e-9))
    palette_size = int((1.0 + alpha) * n + 1e-9)
    trace: List[str] = []
    _trace(trace, "setup", True, eps_formula="%.3g" % eps_formula,
           eps_used="%.3g" % eps_used, leftovers=r, palette=palette_size)

    trim = trim_to_size(tree, n - r, source.substream("trim"))
    eps_sub = (r / n) if r >= 1 else 1e-13
    if trim.t0.m == 1:
        params = None
    else:
        if derive_kwargs is None:
            derive_kwargs = dict(zeta=0.4 * eps_sub / (2.0 * (1.0 - eps_sub)),
                                 beta=0.3, rho=0.05, m_mode="adaptive",
                                 c_m=3.0)
        params = derive_parameters(eps_sub, d, n, **derive_kwargs)
    almost = embed_almost_spanning(n, p, palette_size, trim.t0, eps_sub, d,
                                   source.substream("almost"), params=params,
                                   check_mode=check_mode,
                                   check_trials=check_trials,
                                   embed_budget=embed_budget)
    return absorb_leftovers(seed, tree, trim, almost, delta, d, eps_used,
                            source, c_ln=c_ln, eps_formula=eps_formula,
                            base_trace=trace,
                            partition_retries=partition_retries)
