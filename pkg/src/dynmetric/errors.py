"""Exception hierarchy.

Everything the library raises on bad input derives from :class:`InputError`;
failures of the optimizer itself derive from :class:`NumericalError`. The CLI
maps the two families onto exit codes 2 and 3.
"""


class DynMetricError(Exception):
    """Base class for all library errors."""


class InputError(DynMetricError, ValueError):
    """Malformed or unusable input data, files or parameters."""


class NumericalError(DynMetricError, ArithmeticError):
    """The solver hit a numerically unsupported configuration."""


# dataset
class EmptyFile(InputError):
    pass


class RaggedRows(InputError):
    def __init__(self, row, expected, got):
        self.row, self.expected, self.got = row, expected, got
        super().__init__(f"row {row} has {got} columns, expected {expected}")


class NonNumericFeature(InputError):
    def __init__(self, row, column, value):
        self.row, self.column, self.value = row, column, value
        super().__init__(f"non-numeric value {value!r} at row {row}, column {column}")


class MissingLabelColumn(InputError):
    pass


class ClassTooSmall(InputError):
    def __init__(self, label, size, folds):
        self.label, self.size, self.folds = label, size, folds
        super().__init__(f"class {label!r} has {size} members, fewer than folds={folds}")


class InvalidDimensions(InputError):
    pass


# metric
class DimensionMismatch(InputError):
    pass


class SingularPrior(InputError):
    pass


class FormatError(InputError):
    pass


class PsdViolation(NumericalError):
    pass


# solver / constraints
class SingleClassDataset(InputError):
    pass


class DegenerateDataset(InputError):
    pass


class NumericalBreakdown(NumericalError):
    pass


# classifier
class EmptyTrainingSet(InputError):
    pass
