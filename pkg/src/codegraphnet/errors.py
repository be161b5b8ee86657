"""Exception types shared across the package.

Everything raised on bad data or bad shapes derives from :class:`CgnError`,
so callers (and the HTTP service) can distinguish tool errors from bugs.
"""


class CgnError(Exception):
    """Base class for all data / configuration errors raised by this package."""


class SchemaError(CgnError):
    """A CSV or JSON document does not match the expected schema."""


class LabelError(CgnError):
    """A label string does not name one of the known CWE classes."""


class DuplicateIdError(CgnError):
    """Two samples (or records) share the same id."""


class BalanceError(CgnError):
    """A balancing target is infeasible for the given corpus."""


class StratificationError(CgnError):
    """A class is too small for the requested split or fold count."""


class EmptyInputError(CgnError):
    """An operation received empty input where at least one element is required."""


class ShapeError(CgnError):
    """Matrix or vector dimensions do not line up."""


class DimensionError(CgnError):
    """An embedding dimension is invalid or inconsistent."""


class EmbeddingLookupError(CgnError):
    """A sample id is missing from a precomputed embedding file."""


class ExchangeFormatError(CgnError):
    """An embedding exchange file is malformed."""


class DataSizeError(CgnError):
    """Too few samples for the requested training procedure."""


class TrainingError(CgnError):
    """Training was invoked on unusable data."""


class ValidationError(CgnError):
    """An input value violates a documented precondition."""


class FoldError(CgnError):
    """A cross-validation fold failed; carries the fold index."""

    def __init__(self, fold: int, message: str):
        super().__init__(f"fold {fold}: {message}")
        self.fold = fold
