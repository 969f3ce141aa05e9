"""Exception types shared across the toolkit."""

from __future__ import annotations


class ToolkitError(Exception):
    """Base class for all entropick errors."""


class MalformedTraceError(ToolkitError):
    """A logprob or entropy payload violates its invariants."""


class CacheParseError(ToolkitError):
    """A cache file line failed schema validation."""

    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        self.line = line
        self.path = path
        prefix = ""
        if path is not None:
            prefix += f"{path}:"
        if line is not None:
            prefix += f"line {line}: "
        super().__init__(prefix + message)


class DuplicateRecordError(CacheParseError):
    """Two records share the same (problem_id, sample_id)."""


class NoCentroidError(ToolkitError):
    """A trajectory has no phases (or no entropy mass) to take a centroid of."""


class EmptyPoolError(ToolkitError):
    """A selector was handed no usable candidates."""


class UnsupportedPayloadError(ToolkitError):
    """A selection method needs data the candidate records do not carry."""

    def __init__(self, method: str, message: str):
        self.method = method
        super().__init__(f"{method}: {message}")


class MissingLabelError(ToolkitError):
    """An evaluation needs correctness labels and a record has none."""


class InfeasibleSampleError(ToolkitError):
    """A subsample size exceeds the candidate count of some problem."""

    def __init__(self, problem_id: str, requested: int, available: int):
        self.problem_id = problem_id
        self.requested = requested
        self.available = available
        super().__init__(
            f"cannot draw {requested} candidates for problem {problem_id!r}: "
            f"only {available} available"
        )


class SynthSpecError(ToolkitError):
    """A synthetic-corpus spec is internally inconsistent or infeasible."""
