"""Exception types shared across the package.

Every error raised on purpose derives from :class:`ObsframeError`, so callers
(and the CLI exit-code mapping) can distinguish our refusals from genuine bugs.
"""


class ObsframeError(Exception):
    """Base class for all package errors."""


class NonFiniteError(ObsframeError):
    """An input or intermediate value contains NaN or Inf."""


class DimensionMismatchError(ObsframeError):
    """Operands do not share the required dimensions."""


class QuadratureError(ObsframeError):
    """A quadrature grid does not match the requested integration interval."""


class NotDiagonalizableError(ObsframeError):
    """Eigenvector basis failed the conditioning certificate."""

    def __init__(self, message: str, condition_number: float = float("inf")):
        super().__init__(message)
        self.condition_number = condition_number


class TailNotCertifiableError(ObsframeError):
    """An infinite time horizon cannot be truncated with a certified tail bound."""


class NotObservableError(ObsframeError):
    """Reconstruction or a downstream step was refused: lower frame bound too small."""


class NotApplicableError(ObsframeError):
    """The requested check does not apply to this kind of system."""


class DomainError(ObsframeError):
    """Input data violates the spectral regime a criterion is stated for."""


class ConvergenceError(ObsframeError):
    """A closed-form series or integral diverges for this spectrum."""


class GuardViolationError(ObsframeError):
    """Points sit inside the guard band of the disc-to-half-plane map."""

    def __init__(self, message: str, indices: tuple = ()):
        super().__init__(message)
        self.indices = tuple(indices)


class NotSelfAdjointError(ObsframeError):
    """Operator is not Hermitian within tolerance."""


class NotStronglyStableError(ObsframeError):
    """Operator norm is not strictly below one."""


class ParseError(ObsframeError):
    """Input file is not valid JSON/CSV."""


class SchemaError(ObsframeError):
    """Input file parses but does not match the expected schema."""

    def __init__(self, message: str, pointer: str = ""):
        super().__init__(f"{message} (at {pointer})" if pointer else message)
        self.pointer = pointer


class InvariantError(SchemaError):
    """Input file matches the schema but violates a semantic invariant."""
