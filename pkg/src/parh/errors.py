"""Exception hierarchy.

Every error raised by the library derives from ParhError and carries a
machine-readable ``kind`` used by the CLI when emitting structured reports.
"""

from __future__ import annotations


class ParhError(Exception):
    """Base class for all library errors."""

    kind = "error"


class SchemaError(ParhError):
    """Input file or record violates the schema or a declared invariant."""

    kind = "schema-mismatch"

    def __init__(self, message: str, field: str | None = None):
        self.field = field
        super().__init__(message if field is None else f"{field}: {message}")


class DegenerateGapError(ParhError):
    """Extended weight set has a single element; no gap is defined."""

    kind = "degenerate-gap"


class PerturbationRangeError(ParhError):
    """epsilon is too large relative to the weight gap."""

    kind = "perturbation-out-of-range"


class InvalidPsiError(ParhError):
    """psi map violates its closeness/congruence/window constraints."""

    kind = "invalid-psi"


class DimensionTooLowError(ParhError):
    kind = "dimension-too-low"


class NotEquivariantError(ParhError):
    """Descent requested without a consistent cyclic-group grading."""

    kind = "not-equivariant"


class NoCandidatesError(ParhError):
    kind = "no-candidates"


class BadMetricError(ParhError):
    """Metric field is not Hermitian positive definite."""

    kind = "bad-metric"


class BadProjectorError(ParhError):
    kind = "bad-projector"


class NotPrimitiveError(ParhError):
    kind = "not-primitive"


class OutOfDomainError(ParhError):
    kind = "out-of-domain"


class EpsilonTooLargeError(ParhError):
    kind = "epsilon-too-large"


class HypothesisViolatedError(ParhError):
    """Perturbation field violates its declared decay bounds."""

    kind = "hypothesis-violated"


class DegreeMismatchError(ParhError):
    """Scalar solve has no solution: source integral is not zero."""

    kind = "degree-mismatch"


class FlowBlowupError(ParhError):
    """Flow lost positive definiteness; carries the last good state."""

    kind = "flow-blowup"

    def __init__(self, message: str, last_state=None):
        self.last_state = last_state
        super().__init__(message)


class ShortcutInvalidError(ParhError):
    kind = "shortcut-invalid-at-lambda-zero"
