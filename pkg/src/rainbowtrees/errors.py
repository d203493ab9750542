"""Failure taxonomy shared across the package.

Algorithmic failures (a randomized routine not finding its object) are
distinct from usage errors (bad arguments), and carry enough structure for
the harness to bucket them by stage.
"""

from __future__ import annotations


class RainbowTreesError(Exception):
    """Base class for all package-specific errors."""


class ParameterError(RainbowTreesError, ValueError):
    """Arguments violate a documented precondition."""


class InfeasibleParameters(ParameterError):
    """Derived parameters cannot support the construction at this n.

    Attributes
    ----------
    minimum_n : smallest n at which the same inputs become feasible,
        or None when no finite n helps.
    """

    def __init__(self, message, minimum_n=None):
        super().__init__(message)
        self.minimum_n = minimum_n


class FormatError(RainbowTreesError, ValueError):
    """A text payload does not match the expected file format."""

    def __init__(self, message, line=None):
        if line is not None:
            message = "line %d: %s" % (line, message)
        super().__init__(message)
        self.line = line


class StageFailure(RainbowTreesError):
    """A randomized construction stage failed on this sample.

    Not a bug: the underlying event simply did not occur.  `stage` names
    the failing step for aggregation; `detail` is free-form diagnostics.
    """

    def __init__(self, stage: str, message: str, detail=None):
        super().__init__("[%s] %s" % (stage, message))
        self.stage = stage
        self.detail = detail


class SparsifyFailure(StageFailure):
    """Fewer than the requested number of palette colours survived."""

    def __init__(self, message, survivors=None, needed=None):
        super().__init__("sparsify", message,
                         detail={"survivors": survivors, "needed": needed})
        self.survivors = survivors
        self.needed = needed


class ExpanderFailure(StageFailure):
    """No effective expander of the required order exists in the sample."""

    def __init__(self, message, detail=None):
        super().__init__("expander", message, detail)


class EmbedFailure(StageFailure):
    """Tree embedding exhausted its backtracking budget."""

    def __init__(self, message, placed=None, total=None):
        super().__init__("embed", message,
                         detail={"placed": placed, "total": total})
        self.placed = placed
        self.total = total


class RootEdgeFailure(StageFailure):
    """Too few reservoir-coloured edges at a root vertex.

    `pool` carries the partial list found, so callers may proceed in a
    degraded mode while recording that the hypothesis failed.
    """

    def __init__(self, message, pool=(), needed=0):
        super().__init__("root-edges", message,
                         detail={"found": len(pool), "needed": needed})
        self.pool = list(pool)
        self.needed = needed


class AbsorptionFailure(StageFailure):
    """A leftover vertex could not be absorbed into the partial tree."""

    def __init__(self, message, vertex=None, detail=None):
        super().__init__("absorption", message, detail)
        self.vertex = vertex


class PartitionFailure(StageFailure):
    """The highly connected partition audit rejected a block."""

    def __init__(self, message, detail=None):
        super().__init__("partition", message, detail)
