"""Almost-spanning rainbow tree embedding in a coloured random graph.

The prescribed tree is cut into a bounded number of pieces, a small slice
of the palette is set aside as a reservoir for connecting edges, and the
pieces are embedded one at a time into pairwise-disjoint vertex blocks:
each block is sparsified into a uniform rainbow graph on fresh colours,
trimmed to an effective expander, linked to the already-embedded forest
through reservoir-coloured edges at the piece's root, and the piece is
then placed level by level with one bipartite matching per level.  All
host randomness flows
through an exposure oracle, so audits can confirm the procedure never
consulted an edge or colour before the stage that reveals it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

from .errors import (EmbedFailure, ExpanderFailure, InfeasibleParameters,
                     ParameterError, RootEdgeFailure, SparsifyFailure)
from .expanders import (ExpandParams, degrade_attach, ell1, ell2,
                        find_effective_expander, sparsify)
from .exposure import ExposureOracle
from .graphs import ColouredGraph
from .rng import RandomSource
from .trees import Tree, compute_root_sets, decompose_tree

Pair = Tuple[int, int]


def _norm(u: int, v: int) -> Pair:
    return (u, v) if u < v else (v, u)


# ---------------------------------------------------------------------------
# parameters


@dataclass(frozen=True)
class PipelineParams:
    """Derived constants steering one almost-spanning embedding run.

    `zeta` is the block slack, `beta` the piece-size scale, `rho` the
    reservoir fraction, and `xi` the actual cap ratio handed to the tree
    cutter.  `beta_cap`/`rho_cap` record the values the smallness
    inequalities would demand; overrides may exceed them (recorded in
    `within_caps`) because finite experiments cannot honour asymptotic
    smallness.
    """

    eps: float
    d: int
    n: int
    zeta: float
    beta: float
    rho: float
    xi: float
    s_bound: int
    reservoir_size: int
    beta_cap: float
    rho_cap: float
    within_caps: bool
    expander_c_mode: str = "density"
    m_mode: str = "fixed"
    c_m: float = 3.0
    block_scale: float = 1.0

    def block_size(self, piece_order: int) -> int:
        """Host block size for a piece with `piece_order` tree nodes.

        (1 + 3 zeta / 2) times the piece order is the floor the
        embedding argument needs; `block_scale` >= 1 widens the block
        when the vertex budget allows, which only adds room.  The caller
        still checks that the blocks fit disjointly.
        """
        base = (1.0 + 1.5 * self.zeta) * piece_order
        return int(math.ceil(self.block_scale * base - 1e-9))

    def stage_edge_count(self, index: int, block_order: int) -> int:
        """Edge budget m for the sparsified stage graph (0-based index)."""
        if self.m_mode == "fixed":
            share = self.n / 4.0 if index == 0 else self.eps * self.n / 4.0
            return int(share)
        return int(self.c_m * block_order)

    def balanced_block(self, piece_order: int, p: float, colours_free: int,
                       palette_size: int, min_order: int = 0
                       ) -> Tuple[int, int]:
        """Block size and edge budget balancing density against colours.

        A rainbow stage graph with m edges needs m distinct colours among
        the roughly Binomial(N choose 2, p) present pairs.  Colours land
        uniformly in the whole palette, so the expected usable yield from
        q still-free colours is q(1 - exp(-present/palette)).  Starting
        from the structural floor (1 + 3 zeta / 2) * piece_order, the
        block is widened until c_m * N edges fit under 90% of that
        yield, so the stage keeps average degree about 2 c_m without
        outrunning the palette.  `min_order` lets the caller demand extra
        width (rooted stages need the block big enough that the piece
        root sees a few reservoir-coloured edges).  Returns
        (block size, edge budget).
        """
        q = float(colours_free)
        floor_n = self.block_size(piece_order)
        # a fill ratio around 0.6 keeps the level matchings slack, so do
        # not even consider tighter blocks than that
        start = max(floor_n, int(math.ceil(piece_order / 0.6)), min_order)
        best = (start, 0)
        cap = max(start + 1, min(self.n, 6 * floor_n, 2 * start))
        for N in range(start, cap + 1):
            present = 0.5 * N * (N - 1) * p
            if q <= 0.0:
                break
            yield_mean = q * (1.0 - math.exp(-present / palette_size))
            supply = int(0.9 * min(yield_mean, present))
            want = int(self.c_m * N)
            if supply >= want:
                return N, want
            if supply > best[1]:
                best = (N, supply)
        return best

    def stage_degree_scale(self, index: int, block_order: int, m: int) -> float:
        """The C parameter of the stage's expander family."""
        xi_i = block_order / self.n
        if self.expander_c_mode == "xi":
            scale = 1.0 / (16.0 * xi_i * xi_i)
            return scale if index == 0 else self.eps * scale
        # density reading: a graph with m edges on N vertices matches the
        # binomial model of average degree 4C when C = m / (2N)
        return m / (2.0 * block_order)

    def stage_expand_params(self, index: int, C: float) -> ExpandParams:
        r = self.d + 1 if index == 0 else self.d + 2
        eta = min(1.0 / (2 * self.d + 2) if index == 0 else 1.0 / (2 * self.d + 1),
                  1.0 / (r + 2))
        return ExpandParams(theta=self.zeta / 2.0, C=C, eta=eta, r=r)

    def stage_regime(self, index: int, C: float) -> Dict[str, bool]:
        """Truth values of the asymptotic side conditions at this scale."""
        flags = {"c_gt_1": C > 1.0,
                 "c_covers_zeta": C >= 50.0 / self.zeta}
        if C > 1.0:
            flags["c_covers_ell1"] = C >= ell1(self.d + 1, C)
            flags["ell2_ge_ell1"] = (ell2(self.zeta / 2.0, self.d, C)
                                     >= ell1(self.d + 1, C))
        else:
            flags["c_covers_ell1"] = False
            flags["ell2_ge_ell1"] = False
        return flags


def derive_parameters(eps: float, d: int, n: int, *,
                      zeta: Optional[float] = None,
                      beta: Optional[float] = None,
                      rho: Optional[float] = None,
                      c_beta: float = 0.01, c_rho: float = 0.01,
                      expander_c_mode: str = "density",
                      m_mode: str = "fixed",
                      c_m: float = 3.0,
                      block_scale: float = 1.0) -> PipelineParams:
    """Fix the constants of one embedding run.

    Without overrides, `zeta` sits at its cap eps/(2(1-eps)) (clamped to
    1/2 to keep the logarithmic terms meaningful), and `beta`, `rho` sit
    at their smallness caps with factors `c_beta`, `c_rho`.  Overrides are
    accepted beyond the caps; `within_caps` records whether they fit.

    Raises InfeasibleParameters when the piece-size window collapses at
    this n (the cutter needs xi*n >= d), reporting the minimum workable n.
    """
    if not 0.0 < eps < 1.0:
        raise ParameterError("eps must lie in (0, 1), got %r" % eps)
    if int(d) != d or d < 2:
        raise ParameterError("d must be an integer >= 2, got %r" % d)
    if int(n) != n or n < 1:
        raise ParameterError("n must be a positive integer, got %r" % n)
    if expander_c_mode not in ("density", "xi"):
        raise ParameterError("expander_c_mode must be 'density' or 'xi'")
    if m_mode not in ("fixed", "adaptive", "balanced"):
        raise ParameterError("m_mode must be 'fixed', 'adaptive' or 'balanced'")
    if block_scale < 1.0:
        raise ParameterError("block_scale must be >= 1, got %r" % block_scale)
    d = int(d)
    n = int(n)

    zeta_cap = eps / (2.0 * (1.0 - eps))
    if zeta is None:
        zeta = min(zeta_cap, 0.5)
    if not 0.0 < zeta <= 0.5:
        raise ParameterError("zeta must lie in (0, 1/2], got %r" % zeta)
    if zeta > zeta_cap + 1e-12:
        raise ParameterError("zeta=%g exceeds its cap %g" % (zeta, zeta_cap))

    beta_cap = c_beta * zeta * eps / (d ** 4 * math.log(1.0 / zeta))
    if beta is None:
        beta = beta_cap
    if beta <= 0.0:
        raise ParameterError("beta must be positive, got %r" % beta)

    rho_cap = c_rho * eps
    if rho is None:
        rho = rho_cap
    if not 0.0 <= rho < 1.0:
        raise ParameterError("rho must lie in [0, 1), got %r" % rho)

    xi = (1.0 - 1.5 * zeta) * beta
    if not 0.0 < xi < 1.0:
        raise ParameterError("piece cap ratio %g outside (0, 1); "
                             "lower beta or zeta" % xi)
    if xi * n < d:
        need = int(math.ceil(d / xi))
        raise InfeasibleParameters(
            "piece-size window empty at n=%d: xi*n = %.3g < d = %d; "
            "need n >= %d" % (n, xi * n, d, need), minimum_n=need)

    within = (beta <= beta_cap * (1.0 + 1e-9)) and (rho <= rho_cap * (1.0 + 1e-9))
    s_bound = d * int(math.ceil(1.0 / xi - 1e-12)) + 1
    return PipelineParams(eps=eps, d=d, n=n, zeta=zeta, beta=beta, rho=rho,
                          xi=xi, s_bound=s_bound,
                          reservoir_size=int(rho * n),
                          beta_cap=beta_cap, rho_cap=rho_cap,
                          within_caps=within,
                          expander_c_mode=expander_c_mode,
                          m_mode=m_mode, c_m=c_m, block_scale=block_scale)


# ---------------------------------------------------------------------------
# rooted embedding, level by level


def _match_level(nodes, cand, gen) -> Optional[Dict[int, int]]:
    """Assign every node a distinct host from its candidate list.

    One Hopcroft-Karp run resolves the whole level's contention at once.
    Candidate insertion order is shuffled so that a rerun can land on a
    different maximum matching.  Returns None when some node stays
    unmatched (the maximum matching misses it regardless of shuffling).
    Sides are tagged with int tuples, never strings: string hashing
    varies across processes and would leak into the matching order.
    """
    import networkx as nx

    bip = nx.Graph()
    left = [(0, v) for v in nodes]
    bip.add_nodes_from(left)
    order = list(nodes)
    gen.shuffle(order)
    for v in order:
        ws = list(cand[v])
        gen.shuffle(ws)
        for w in ws:
            bip.add_edge((0, v), (1, w))
    matching = nx.bipartite.hopcroft_karp_matching(bip, top_nodes=left)
    placed = {}
    for v in nodes:
        partner = matching.get((0, v))
        if partner is None:
            return None
        placed[v] = partner[1]
    assert len(set(placed.values())) == len(nodes)
    return placed


def _embed_pass(levels, parent, demand, adj, gen, root_vertex,
                backjumps: int = 4) -> Tuple[Optional[Dict[int, int]], int]:
    """One full attempt at a level-synchronous embedding.

    Places the root, then every deeper level in one bipartite matching
    against the unused neighbourhoods of the parents' images.  A node
    only considers hosts that still have at least as many free
    neighbours as the node has children, so the next level is never
    doomed by an obviously starved choice.  When a level cannot be
    perfectly matched, the previous level's matching is redrawn up to
    `backjumps` times before the pass gives up.  Returns (image or None,
    nodes placed in the deepest attempt).
    """
    root = levels[0][0]
    free = {w: len(adj[w]) for w in adj}

    def take(w: int) -> None:
        used.add(w)
        for u in adj[w]:
            free[u] -= 1

    def give_back(w: int) -> None:
        used.discard(w)
        for u in adj[w]:
            free[u] += 1

    image: Dict[int, int] = {}
    used: set = set()
    if root_vertex is not None:
        r = root_vertex
    else:
        pool = [w for w in adj if free[w] >= demand[root]]
        if not pool:
            return None, 0
        pool.sort()
        r = pool[int(gen.integers(len(pool)))]
    image[root] = r
    take(r)

    def candidates(level) -> Dict[int, List[int]]:
        out = {}
        for v in level:
            pw = image[parent[v]]
            out[v] = [w for w in adj[pw]
                      if w not in used and free[w] >= demand[v]]
        return out

    placed_best = 1
    i = 1
    tries_left = {i: backjumps for i in range(1, len(levels))}
    while i < len(levels):
        level = levels[i]
        placed = _match_level(level, candidates(level), gen)
        if placed is not None:
            for v, w in placed.items():
                image[v] = w
                take(w)
            placed_best = max(placed_best, len(image))
            i += 1
            continue
        # redraw the previous level and try again; at the first level
        # there is nothing to redraw unless the root itself is free
        if i == 1 or tries_left[i] <= 0:
            return None, placed_best
        tries_left[i] -= 1
        for v in levels[i - 1]:
            give_back(image.pop(v))
        i -= 1
    return image, placed_best


def embed_rooted_tree(host: ColouredGraph, tree: Tree, root_node: int,
                      root_vertex: Optional[int] = None,
                      source: Optional[RandomSource] = None,
                      budget: Optional[int] = None,
                      restarts: int = 30) -> Dict[int, int]:
    """Injective tree embedding into `host`, root pinned when given.

    The tree is placed level-synchronously: after the root, each BFS
    level is assigned hosts in one global bipartite matching against the
    unused neighbourhoods of the parents' images, so siblings and
    cousins never lose to each other through unlucky sequential order.
    A level that cannot be perfected triggers a redraw of the previous
    level's matching, and a bounded number of full restarts sits on top.
    `budget` caps the total number of level matchings attempted (default
    60 per restart level count).  Exhausting it is an honest failure,
    not an error.
    """
    if root_node not in tree.nodes:
        raise ParameterError("root node %r not in the tree" % (root_node,))
    if tree.m > host.order:
        raise ParameterError("tree order %d exceeds host order %d"
                             % (tree.m, host.order))
    if root_vertex is not None and root_vertex not in host.vertex_set:
        raise ParameterError("root vertex %r outside the host" % (root_vertex,))

    gen = (source or RandomSource(0)).generator()
    order = tree.bfs_order(root_node)
    parent = tree.parent_map(root_node)
    adj = host.adjacency()

    demand = {v: 0 for v in tree.nodes}
    for v in order[1:]:
        demand[parent[v]] += 1
    depth = {root_node: 0}
    for v in order[1:]:
        depth[v] = depth[parent[v]] + 1
    levels: List[List[int]] = [[] for _ in range(1 + max(depth.values()))]
    for v in order:
        levels[depth[v]].append(v)

    if budget is None:
        budget = 60 * len(levels)
    best = 0
    spent = 0
    for _ in range(max(1, restarts)):
        if spent >= budget:
            break
        image, reached = _embed_pass(levels, parent, demand, adj, gen,
                                     root_vertex)
        spent += len(levels)
        best = max(best, reached)
        if image is None:
            continue
        assert len(image) == tree.m
        assert len(set(image.values())) == tree.m
        for x, y in tree.edges:
            assert host.has_edge(image[x], image[y]), \
                "embedded edge (%d, %d) missing from the host" % (x, y)
        return image
    raise EmbedFailure(
        "no embedding within budget %d: best attempt placed %d of %d"
        % (budget, best, tree.m), placed=best, total=tree.m)


# ---------------------------------------------------------------------------
# root edges


def select_root_edges(root_vertex: int, host, oracle: ExposureOracle,
                      fresh_reservoir: Iterable[int], needed: int,
                      stage: int = 0) -> Tuple[Tuple[Pair, int], ...]:
    """Reveal the pairs from `root_vertex` into the host and keep a rainbow
    set of `needed` edges coloured from the fresh reservoir.

    Presence is revealed for every pair; colours only for the present
    ones.  All revelations are recorded whether or not enough edges turn
    up.  Returns ((pair, colour), ...) sorted by colour; raises
    RootEdgeFailure carrying the partial pool when fewer than `needed`
    exist.
    """
    if needed < 0:
        raise ParameterError("needed must be >= 0, got %r" % needed)
    if needed == 0:
        return ()
    vertices = sorted(host.vertex_set if isinstance(host, ColouredGraph)
                      else set(int(v) for v in host))
    if root_vertex in vertices:
        raise ParameterError("root vertex %d lies inside the host" % root_vertex)
    reservoir = set(int(c) for c in fresh_reservoir)

    by_colour: Dict[int, Pair] = {}
    for v in vertices:
        pair = _norm(root_vertex, v)
        if oracle.expose_presence(pair, kind="root", stage=stage):
            c = oracle.expose_colour(pair, kind="root", stage=stage)
            if c in reservoir and c not in by_colour:
                by_colour[c] = pair
    pool = tuple((by_colour[c], c) for c in sorted(by_colour))
    if len(pool) < needed:
        raise RootEdgeFailure(
            "only %d reservoir-coloured edges at vertex %d, needed %d"
            % (len(pool), root_vertex, needed), pool=pool, needed=needed)
    return pool[:needed]


# ---------------------------------------------------------------------------
# the pipeline


@dataclass(frozen=True)
class AlmostSpanningResult:
    """Outcome of one almost-spanning run.

    `success` distinguishes a completed rainbow embedding from a stage
    failure; in the latter case `stage` names the failing step
    (sparsify / expander / root-edges / embed / available-colours) and
    `embedding` is None.  `edge_colours` maps each embedded host edge to
    its colour.  `hypothesis_met` records whether every connecting step
    found the full quota of reservoir edges its guarantee asks for;
    `regime` holds the per-stage truth values of the asymptotic side
    conditions (recorded, never enforced).
    """

    success: bool
    stage: Optional[str]
    detail: Optional[str]
    trace: Tuple[str, ...]
    embedding: Optional[Dict[int, int]]
    edge_colours: Dict[Pair, int]
    params: Optional[PipelineParams]
    hypothesis_met: bool
    regime: Dict[str, Dict[str, bool]]
    reservoir_used: FrozenSet[int]
    oracle: Optional[ExposureOracle]


def _trace(lines: List[str], stage: str, ok: bool, **counts) -> None:
    body = ",".join("%s=%s" % (k, counts[k]) for k in sorted(counts))
    lines.append("stage=%s status=%s detail=%s"
                 % (stage, "ok" if ok else "fail", body or "-"))


def format_trace(trace: Sequence[str]) -> str:
    return "\n".join(trace) + ("\n" if trace else "")


def format_embedding(mapping: Dict[int, int]) -> str:
    """One `node vertex` line per placement, sorted by node."""
    return "".join("%d %d\n" % (node, mapping[node]) for node in sorted(mapping))


def embed_almost_spanning(n: int, p: float, palette_size: int, tree: Tree,
                          eps: float, d: int, source: RandomSource, *,
                          params: Optional[PipelineParams] = None,
                          check_mode: str = "sampled", check_trials: int = 60,
                          embed_budget: Optional[int] = None
                          ) -> AlmostSpanningResult:
    """Embed `tree` into a lazily revealed coloured random graph on [n].

    Orchestrates parameter derivation, tree cutting, block allocation,
    per-stage sparsification, expander extraction, reservoir root edges,
    and rooted embedding.  Returns a result object either way; stage
    failures are legitimate random outcomes, not exceptions.  Precondition
    violations and parameter infeasibility do raise.
    """
    if tree.max_degree() > d:
        raise ParameterError("tree max degree %d exceeds d=%d"
                             % (tree.max_degree(), d))
    if tree.m > (1.0 - eps) * n + 1e-9:
        raise ParameterError("tree order %d exceeds (1-eps)n = %.2f"
                             % (tree.m, (1.0 - eps) * n))
    if palette_size < 1:
        raise ParameterError("palette_size must be >= 1")

    if tree.m == 1:
        # nothing random is consumed; parameters are not even needed
        node = next(iter(tree.nodes))
        oracle = ExposureOracle(n, palette_size, p, source.substream("oracle"))
        return AlmostSpanningResult(
            success=True, stage=None, detail=None,
            trace=("stage=trivial status=ok detail=nodes=1",),
            embedding={node: 0}, edge_colours={}, params=params,
            hypothesis_met=True, regime={}, reservoir_used=frozenset(),
            oracle=oracle)

    if params is None:
        params = derive_parameters(eps, d, n)
    if params.n != n:
        raise ParameterError("params were derived for n=%d, not n=%d"
                             % (params.n, n))

    oracle = ExposureOracle(n, palette_size, p, source.substream("oracle"))
    trace: List[str] = []
    regime: Dict[str, Dict[str, bool]] = {}

    def failure(stage: str, detail: str, hypothesis_met: bool,
                reservoir_used) -> AlmostSpanningResult:
        return AlmostSpanningResult(
            success=False, stage=stage, detail=detail, trace=tuple(trace),
            embedding=None, edge_colours={}, params=params,
            hypothesis_met=hypothesis_met, regime=regime,
            reservoir_used=frozenset(reservoir_used), oracle=oracle)

    decomposition = decompose_tree(tree, d, eps, params.xi, n=n)
    roots = compute_root_sets(decomposition)
    s = decomposition.s
    _trace(trace, "decompose", True, pieces=s,
           largest=max(len(piece) for piece in decomposition.pieces))

    # disjoint consecutive blocks, one per piece; in balanced mode the
    # block and edge budget are chosen together against the projected
    # colour supply (earlier pieces consume one colour per tree edge)
    budgets: List[Optional[int]] = [None] * s
    if params.m_mode == "balanced":
        sizes = []
        reservoir_n = min(params.reservoir_size, palette_size)
        q_free = palette_size - reservoir_n
        # rooted pieces need the root to see ~4 reservoir-coloured edges
        rooted_min = 0
        if s > 1 and reservoir_n > 0 and p > 0.0:
            rooted_min = int(math.ceil(4.0 * palette_size
                                       / (p * reservoir_n)))
        for t in roots.augmented_trees:
            n_blk, m_blk = params.balanced_block(
                t.m, p, q_free, palette_size,
                min_order=0 if not sizes else rooted_min)
            sizes.append(n_blk)
            budgets[len(sizes) - 1] = m_blk
            q_free -= t.m - 1
    else:
        sizes = [params.block_size(t.m) for t in roots.augmented_trees]
    if sum(sizes) > n:
        raise InfeasibleParameters(
            "blocks need %d vertices but only %d exist" % (sum(sizes), n),
            minimum_n=sum(sizes))
    offsets = [0]
    for size in sizes[:-1]:
        offsets.append(offsets[-1] + size)
    blocks = [tuple(range(offsets[i], offsets[i] + sizes[i]))
              for i in range(s)]

    reservoir = frozenset(range(min(params.reservoir_size, palette_size)))
    used_colours: set = set()
    reservoir_used: set = set()
    edge_colours: Dict[Pair, int] = {}
    placement: Dict[int, int] = {}
    hypothesis_met = True
    quota = (d + 2) * (d + 2)

    for i in range(s):
        stage_no = i + 1
        piece_tree = roots.augmented_trees[i]
        block = blocks[i]

        available = frozenset(range(palette_size)) - used_colours - reservoir
        if len(available) < (eps - params.rho) * n - 1e-9:
            _trace(trace, "available-%d" % stage_no, False,
                   available=len(available))
            return failure("available-colours",
                           "only %d colours available at stage %d"
                           % (len(available), stage_no),
                           hypothesis_met, reservoir_used)

        oracle.assert_vertices_untouched(block)

        m = budgets[i] if budgets[i] is not None \
            else params.stage_edge_count(i, len(block))
        if m < 1:
            _trace(trace, "sparsify-%d" % stage_no, False, m=m)
            return failure("sparsify",
                           "no workable edge budget for a block of %d "
                           "vertices at this density" % len(block),
                           hypothesis_met, reservoir_used)
        if m > len(available):
            _trace(trace, "sparsify-%d" % stage_no, False, m=m,
                   available=len(available))
            return failure("sparsify",
                           "edge budget m=%d exceeds the %d available colours"
                           % (m, len(available)), hypothesis_met, reservoir_used)
        sample: dict = {}
        try:
            stage_graph = sparsify(block, p, palette_size, available, m,
                                   source.substream(("sparsify", i)), n=n,
                                   sample_out=sample)
        except SparsifyFailure as exc:
            oracle.record_block(block, sample.get("pairs", ()),
                                sample.get("colours", ()), stage_no)
            _trace(trace, "sparsify-%d" % stage_no, False,
                   survivors=exc.survivors, needed=exc.needed)
            return failure("sparsify", str(exc), hypothesis_met, reservoir_used)
        oracle.record_block(block, sample["pairs"], sample["colours"], stage_no)
        _trace(trace, "sparsify-%d" % stage_no, True, edges=m,
               included=len(sample["pairs"]))

        C = params.stage_degree_scale(i, len(block), m)
        regime["stage-%d" % stage_no] = params.stage_regime(i, C)
        if C <= 1.0:
            _trace(trace, "expander-%d" % stage_no, False, C="%.3g" % C)
            return failure("expander",
                           "degree scale C=%.3g is not above 1 at this n" % C,
                           hypothesis_met, reservoir_used)
        expand = params.stage_expand_params(i, C)
        try:
            effective = find_effective_expander(
                stage_graph, expand, mode=check_mode, trials=check_trials,
                source=source.substream(("expander", i)))
        except ExpanderFailure as exc:
            _trace(trace, "expander-%d" % stage_no, False,
                   item=(exc.detail or {}).get("item"))
            return failure("expander", str(exc), hypothesis_met, reservoir_used)
        sub = effective.subgraph
        assert sub.order >= (1.0 + 0.75 * params.zeta) * piece_tree.m - 1e-9, \
            "effective expander too small for piece %d" % stage_no
        _trace(trace, "expander-%d" % stage_no, True, order=sub.order,
               deleted=len(effective.deleted))

        stage_colour = dict(stage_graph.colouring)
        host = sub
        if i == 0:
            root_node = min(piece_tree.nodes)
            root_vertex = None
        else:
            root_node = decomposition.piece_root(i)
            assert root_node in placement, \
                "piece %d root was never embedded" % stage_no
            root_vertex = placement[root_node]
            fresh = reservoir - used_colours
            try:
                pool = select_root_edges(root_vertex, sub, oracle, fresh,
                                         quota, stage=stage_no)
            except RootEdgeFailure as exc:
                # a short pool can still carry the piece if it covers the
                # root's child count; below that the stage is hopeless
                root_children = sum(1 for e in piece_tree.edges
                                    if root_node in e)
                if len(exc.pool) < root_children:
                    _trace(trace, "root-edges-%d" % stage_no, False,
                           found=len(exc.pool), needed=quota,
                           children=root_children)
                    return failure("root-edges", str(exc), hypothesis_met,
                                   reservoir_used)
                hypothesis_met = False
                pool = tuple(exc.pool)
                _trace(trace, "root-edges-%d" % stage_no, True,
                       found=len(pool), needed=quota, degraded=1)
            else:
                _trace(trace, "root-edges-%d" % stage_no, True,
                       found=len(pool), needed=quota)
            attach = [pair for pair, _ in pool]
            if len(attach) >= quota:
                host = degrade_attach(sub, root_vertex, attach, d)
            else:
                host = ColouredGraph(
                    n, set(sub.edges) | set(attach),
                    vertex_set=set(sub.vertex_set) | {root_vertex})
            for pair, colour in pool:
                stage_colour[pair] = colour

        try:
            mapping = embed_rooted_tree(host, piece_tree, root_node,
                                        root_vertex,
                                        source=source.substream(("embed", i)),
                                        budget=embed_budget)
        except EmbedFailure as exc:
            _trace(trace, "embed-%d" % stage_no, False, placed=exc.placed,
                   total=exc.total)
            return failure("embed", str(exc), hypothesis_met, reservoir_used)

        for node, vertex in mapping.items():
            if i > 0 and node == root_node:
                assert vertex == root_vertex
                continue
            assert node not in placement, "node %r embedded twice" % (node,)
            placement[node] = vertex
        for x, y in piece_tree.edges:
            pair = _norm(mapping[x], mapping[y])
            colour = stage_colour[pair]
            assert colour not in used_colours, \
                "colour %d reused across stages" % colour
            assert pair not in edge_colours
            used_colours.add(colour)
            edge_colours[pair] = colour
            if colour in reservoir:
                reservoir_used.add(colour)
        assert len(reservoir_used) <= s * quota, \
            "reservoir leak exceeds its bound"
        _trace(trace, "embed-%d" % stage_no, True, placed=piece_tree.m)

    assert len(placement) == tree.m
    assert len(set(placement.values())) == tree.m, "placement not injective"
    for x, y in tree.edges:
        assert _norm(placement[x], placement[y]) in edge_colours, \
            "tree edge (%r, %r) has no embedded image" % (x, y)
    assert len(edge_colours) == tree.m - 1
    assert len(set(edge_colours.values())) == tree.m - 1, "image is not rainbow"

    return AlmostSpanningResult(
        success=True, stage=None, detail=None, trace=tuple(trace),
        embedding=placement, edge_colours=edge_colours, params=params,
        hypothesis_met=hypothesis_met, regime=regime,
        reservoir_used=frozenset(reservoir_used), oracle=oracle)


# ---------------------------------------------------------------------------
# colour statistics


def colour_coverage(coloured, allowed: Iterable[int]) -> int:
    """Number of distinct `allowed` colours present on the given edges.

    Accepts a ColouredGraph or any iterable of colour values.
    """
    if isinstance(coloured, ColouredGraph):
        if not coloured.is_coloured:
            raise ParameterError("graph carries no colouring")
        values = coloured.colouring.values()
    else:
        values = list(coloured)
    return len(set(values) & set(int(c) for c in allowed))
