"""Exception hierarchy.

Every error carries the module and the algorithmic construct that failed, plus the
process exit code the CLI maps it to.
"""

from __future__ import annotations

from collections.abc import Sequence


class InclusionMpcError(Exception):
    """Base class for all toolkit errors."""

    module: str = "core"
    construct: str = "unspecified"
    exit_code: int = 9

    def __init__(self, message: str):
        super().__init__(f"{self.module}/{self.construct}: {message}")
        self.detail = message


class ConfigError(InclusionMpcError):
    """Configuration file missing, malformed or rejected by the schema."""

    module = "cli"
    construct = "configuration"
    exit_code = 1


class InconsistentData(InclusionMpcError):
    """A measurement contradicts the declared side information."""

    module = "inclusion"
    construct = "data refinement"
    exit_code = 2

    def __init__(self, message: str, sample_index: int | None = None):
        if sample_index is not None:
            message = f"sample {sample_index}: {message}"
        super().__init__(message)
        self.sample_index = sample_index


class EmptyEnvelope(InclusionMpcError):
    """Envelope intersection over the stored records is empty."""

    module = "inclusion"
    construct = "envelope evaluation"
    exit_code = 2

    def __init__(self, message: str, record_indices: Sequence[int] = ()):
        if record_indices:
            message = f"{message} (records {list(record_indices)})"
        super().__init__(message)
        self.record_indices = list(record_indices)


class EmptyAfterContraction(InclusionMpcError):
    """An algebraic constraint set has no consistent point in the given domains."""

    module = "inclusion"
    construct = "algebraic constraint contraction"
    exit_code = 2


class EnclosureFailure(InclusionMpcError):
    """The Picard rough enclosure could not be validated."""

    module = "reach"
    construct = "rough enclosure"
    exit_code = 3

    def __init__(self, message: str, step: int | None = None):
        if step is not None:
            message = f"step {step}: {message}"
        super().__init__(message)
        self.step = step


class NumericalBreakdown(InclusionMpcError):
    """The simplex hit a pivot below tolerance or failed its optimality re-check."""

    module = "lp"
    construct = "simplex"
    exit_code = 4


class MaxSweepsExceeded(InclusionMpcError):
    """Refinement sweeps hit the cap before reaching a fixpoint (strict mode only)."""

    module = "inclusion"
    construct = "refinement sweep"
    exit_code = 5


class OracleError(InclusionMpcError):
    """A reference oracle could not produce a result."""

    module = "harness"
    construct = "oracle"
    exit_code = 6


class DimensionMismatch(InclusionMpcError):
    """Operand shapes do not agree."""

    module = "core"
    construct = "shape check"
    exit_code = 7


class DivisionByZeroInterval(InclusionMpcError):
    """Interval division by an interval containing zero."""

    module = "interval"
    construct = "division"
    exit_code = 8


class IntervalError(InclusionMpcError):
    """Malformed interval endpoints (NaN, or lower above upper)."""

    module = "interval"
    construct = "construction"
    exit_code = 10


class VerificationFailure(InclusionMpcError):
    """A verified property did not hold (failing battery, non-monotone ablation)."""

    module = "harness"
    construct = "verification"
    exit_code = 11
