"""Exception types shared across the package."""


class HteForestError(Exception):
    """Base class for all package errors."""


class IngestionError(HteForestError):
    """CSV cell is empty or not numeric."""


class CodingError(HteForestError):
    """Treatment column contains a value outside {0, 1}."""


class ValidationError(HteForestError):
    """Inputs violate a documented precondition."""


class SizeError(HteForestError):
    """Too few rows for the requested operation."""


class StratificationError(HteForestError):
    """A treatment arm cannot be represented in every split part."""


class CoverageError(HteForestError):
    """Some unit has no out-of-bag trees."""


class DegenerateVariationError(HteForestError):
    """No treatment variation left to estimate an effect from."""


class DegenerateInferenceError(HteForestError):
    """A test statistic has zero bootstrap variance."""


class CollinearityError(HteForestError):
    """Design matrix is rank deficient."""


class DimensionError(HteForestError):
    """Array shapes do not line up."""
