"""Exception types shared across the package."""


class GridRangeError(ValueError):
    """A time lies outside the grid span."""


class DegenerateSupportError(ValueError):
    """A distribution support is empty or too narrow to discretize."""


class ConstraintError(ValueError):
    """A schedule value violates its feasibility constraints."""


class HorizonError(RuntimeError):
    """Probability mass would leave the grid entirely; the horizon is too short."""


class ModelError(ValueError):
    """An instance fails structural validation."""


class FormatError(ValueError):
    """A document does not conform to the file format contract."""
