"""Lazy revelation of a random host graph and its colouring.

Embedding runs never materialise their random host up front.  An oracle
answers two questions about any vertex pair on demand: does the pair
belong to the random perturbation, and which colour does it carry.  Each
answer is drawn once from a pair-keyed substream, memoised, and written
to a ledger, so audits can confirm that no step peeked at a value before
the step that was supposed to reveal it.

Presence and colour are revealed independently: a block sparsification
reveals presence for every pair inside the block but colours only for
the pairs it included, matching what the sampling actually consumed.
"""

from __future__ import annotations

from typing import Dict, FrozenSet, Iterable, List, Optional, Set, Tuple

from .errors import ParameterError, RainbowTreesError
from .graphs import gen_gnp
from .rng import RandomSource

Pair = Tuple[int, int]


class ExposureError(RainbowTreesError):
    """An exposure contract was violated (a pair was revealed twice, or a
    value was consulted before being revealed).  Always a bug, never a
    random outcome."""


class ExposureOracle:
    """Memoised source of pair presence (in the random graph) and colour.

    Parameters
    ----------
    n : label space; pairs are over range(n).
    palette_size : colours are uniform over range(palette_size).
    p : Bernoulli presence probability for the random perturbation.
    source : RandomSource owning this oracle's randomness.
    """

    def __init__(self, n: int, palette_size: int, p: float,
                 source: RandomSource):
        if n < 1:
            raise ParameterError("n must be >= 1, got %r" % n)
        if palette_size < 1:
            raise ParameterError("palette_size must be >= 1")
        if not 0.0 <= p <= 1.0:
            raise ParameterError("p must lie in [0, 1], got %r" % p)
        self.n = int(n)
        self.palette_size = int(palette_size)
        self.p = float(p)
        self.source = source
        self._presence: Dict[Pair, bool] = {}
        self._colour: Dict[Pair, int] = {}
        self.ledger: List[Tuple[str, Optional[Pair], int]] = []
        self._touched: Set[int] = set()
        self.presence_complete = False

    def _norm(self, pair) -> Pair:
        u, v = int(pair[0]), int(pair[1])
        if u == v:
            raise ParameterError("pair (%d, %d) is a loop" % (u, v))
        if not (0 <= u < self.n and 0 <= v < self.n):
            raise ParameterError("pair (%d, %d) outside range(%d)"
                                 % (u, v, self.n))
        return (u, v) if u < v else (v, u)

    # -- queries ---------------------------------------------------------

    def presence_exposed(self, pair) -> bool:
        return self._norm(pair) in self._presence

    def colour_exposed(self, pair) -> bool:
        return self._norm(pair) in self._colour

    def presence_of(self, pair) -> bool:
        """Already-revealed presence; consulting an unrevealed pair is a bug."""
        key = self._norm(pair)
        if key not in self._presence:
            if self.presence_complete:
                return False
            raise ExposureError("presence of %r consulted before exposure" % (key,))
        return self._presence[key]

    def colour_of(self, pair) -> int:
        key = self._norm(pair)
        if key not in self._colour:
            raise ExposureError("colour of %r consulted before exposure" % (key,))
        return self._colour[key]

    # -- single-pair exposure --------------------------------------------

    def expose_presence(self, pair, kind: str = "probe", stage: int = 0) -> bool:
        key = self._norm(pair)
        if key in self._presence or self.presence_complete:
            raise ExposureError("pair %r presence exposed twice" % (key,))
        gen = self.source.substream(("edge",) + key).generator()
        value = bool(gen.random() < self.p)
        self._presence[key] = value
        self.ledger.append((kind, key, stage))
        self._touched.update(key)
        return value

    def expose_colour(self, pair, kind: str = "tint", stage: int = 0) -> int:
        key = self._norm(pair)
        if key in self._colour:
            raise ExposureError("pair %r colour exposed twice" % (key,))
        gen = self.source.substream(("tint",) + key).generator()
        value = int(gen.integers(0, self.palette_size))
        self._colour[key] = value
        self.ledger.append((kind, key, stage))
        self._touched.update(key)
        return value

    # -- bulk registration -------------------------------------------------

    def record_block(self, vertices: Iterable[int],
                     included_pairs: Iterable[Pair],
                     colours: Iterable[int], stage: int) -> None:
        """Register a block sparsification's raw sample.

        Every pair inside `vertices` had its presence decided (the included
        ones positively, the rest negatively); the included pairs also had
        their colours drawn.  The values were sampled by the sparsifier;
        this merely makes the oracle remember them.
        """
        if self.presence_complete:
            raise ExposureError("cannot register a block after materialization")
        verts = sorted(set(int(v) for v in vertices))
        inc = {}
        for pair, c in zip(included_pairs, colours):
            key = self._norm(pair)
            if key[0] not in verts or key[1] not in verts:
                raise ParameterError("included pair %r leaves the block" % (key,))
            inc[key] = int(c)
        for i, u in enumerate(verts):
            for v in verts[i + 1:]:
                key = (u, v)
                if key in self._presence:
                    raise ExposureError("block pair %r presence exposed twice"
                                        % (key,))
                self._presence[key] = key in inc
                self.ledger.append(("block", key, stage))
        for key, c in inc.items():
            if key in self._colour:
                raise ExposureError("block pair %r colour exposed twice" % (key,))
            if not 0 <= c < self.palette_size:
                raise ParameterError("colour %d outside the palette" % c)
            self._colour[key] = c
        self._touched.update(verts)

    def materialize_presence(self, kind: str = "materialize",
                             stage: int = 0) -> FrozenSet[Pair]:
        """Decide presence for every still-unrevealed pair, in bulk.

        Returns the full edge set of the random perturbation.  Colours stay
        lazy.  Idempotent after the first call.
        """
        if not self.presence_complete:
            fresh = gen_gnp(self.n, self.p,
                            self.source.substream("materialize")).edges
            decided = dict(self._presence)
            for key in fresh:
                if key not in decided:
                    decided[key] = True
            self._presence = decided
            self.presence_complete = True
            self.ledger.append((kind, None, stage))
        edges = frozenset(k for k, v in self._presence.items() if v)
        return edges

    def presence_edges(self) -> FrozenSet[Pair]:
        """Edge set of the perturbation; requires a prior materialization."""
        if not self.presence_complete:
            raise ExposureError("presence has not been fully materialized")
        return frozenset(k for k, v in self._presence.items() if v)

    # -- audits ------------------------------------------------------------

    def assert_vertices_untouched(self, vertices: Iterable[int]) -> None:
        """No ledger entry may touch the given vertex set yet."""
        overlap = self._touched.intersection(int(v) for v in vertices)
        if overlap:
            raise ExposureError(
                "exposure touched vertices %s before their stage"
                % sorted(overlap)[:8])

    def colour_exposure_count(self) -> int:
        return len(self._colour)

    # -- label transport ---------------------------------------------------

    def apply_permutation(self, perm: Dict[int, int]) -> None:
        """Relabel all recorded exposure through a bijection of range(n).

        Used by the randomness-shift argument: transporting the revealed
        pairs keeps the joint law intact because unrevealed pairs are
        exchangeable.
        """
        if (len(perm) != self.n
                or set(perm) != set(range(self.n))
                or set(perm.values()) != set(range(self.n))):
            raise ParameterError("perm must be a bijection of range(%d)" % self.n)

        def move(pair: Pair) -> Pair:
            a, b = perm[pair[0]], perm[pair[1]]
            return (a, b) if a < b else (b, a)

        self._presence = {move(k): v for k, v in self._presence.items()}
        self._colour = {move(k): v for k, v in self._colour.items()}
        self.ledger = [(kind, move(k) if k is not None else None, st)
                       for kind, k, st in self.ledger]
        self._touched = {perm[v] for v in self._touched}
