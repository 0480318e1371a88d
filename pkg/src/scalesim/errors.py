"""Exception types shared across the simulator."""


class ScaleSimError(Exception):
    """Base class for all simulator errors."""


class ConfigError(ScaleSimError):
    """Invalid or unreadable run configuration."""


class DatasetError(ScaleSimError):
    """Problem loading or partitioning the input dataset."""


class ParseError(DatasetError):
    """Malformed cell or row in the input CSV."""

    def __init__(self, message: str, row: int | None = None, column: int | None = None):
        self.row = row
        self.column = column
        where = ""
        if row is not None:
            where = f"row {row}"
            if column is not None:
                where += f", column {column}"
            where += ": "
        super().__init__(where + message)


class SchemaError(DatasetError):
    """Input rows do not carry the expected number of feature columns."""


class InsufficientData(DatasetError):
    """Not enough examples to give every node a usable training share."""


class NumericalDivergence(ScaleSimError):
    """Training produced non-finite weights."""


class EmptyAfterCanonicalization(ScaleSimError):
    """Attribute name has no scorable characters left."""


class InvalidSymbol(ScaleSimError):
    """Character outside the scoring alphabet."""


class NonPositiveInput(ScaleSimError):
    """Efficiency score inputs must be strictly positive."""


class InvalidK(ScaleSimError):
    """Requested cluster count is out of range."""


class DimensionMismatch(ScaleSimError):
    """Weight vectors of different dimensions cannot be aggregated."""


class EmptyCluster(ScaleSimError):
    """Aggregation over zero members."""


class NoAliveMembers(ScaleSimError):
    """Driver election requires at least one alive member."""
