import enum
from typing import Optional


class InputError(RuntimeError):
    """
    Thrown when user-supplied input (a scenario, table, model file or argument) cannot be used

    """

    class ErrorReason(enum.Enum):
        """
        Possible failure reasons

        """

        MALFORMED_DOCUMENT = 1
        MISSING_FIELD = 2
        INVALID_VALUE = 3
        MISSING_FILE = 4
        SCHEMA_MISMATCH = 5
        OUT_OF_RANGE = 6
        UNTRAINED_MODEL = 7
        SHAPE_MISMATCH = 8

    EXIT_CODE: int = 2

    def __init__(
            self,
            reason: ErrorReason,
            *args: str
    ):
        """
        Initialize an input error

        :param reason: The reason for the error
        :param args: Additional error arguments passed to the super-class

        """

        self.reason = reason
        args = list(args)
        args.insert(0, f"[{reason.name}]")
        super().__init__(" ".join(args))


class ScenarioConfigError(InputError):
    """
    Thrown when a scenario document fails to parse or validate

    """

    def __init__(
            self,
            reason: InputError.ErrorReason,
            message: str,
            field: Optional[str] = None,
            line: Optional[int] = None,
            column: Optional[int] = None
    ):
        """
        Create a scenario config error pointing at the offending field or line

        :param reason: The reason for the error
        :param message: Human-readable description
        :param field: Dotted path of the offending field, if known
        :param line: 1-based line in the document, if known
        :param column: 1-based column in the document, if known

        """

        self.field: Optional[str] = field
        self.line: Optional[int] = line
        self.column: Optional[int] = column

        location: str = ""

        if field:
            location = f"at '{field}'"
        elif line is not None:
            location = f"at line {line}" + (f", column {column}" if column is not None else "")

        super().__init__(reason, *filter(None, [location, message]))


class TableSchemaError(InputError):
    """
    Thrown when a CSV table is missing columns or holds unusable values

    """

    def __init__(self, path: str, *args: str):
        self.path: str = path
        super().__init__(InputError.ErrorReason.SCHEMA_MISMATCH, f"'{path}':", *args)


class ModelDocumentError(InputError):
    """
    Thrown when a model document cannot be loaded

    """


class ModelShapeError(InputError):
    """
    Thrown when the layer matrices of a model do not chain

    """

    def __init__(self, *args: str):
        super().__init__(InputError.ErrorReason.SHAPE_MISMATCH, *args)


class UntrainedModelError(InputError):
    """
    Thrown when an untrained model is handed to the channel builder

    """

    def __init__(self, *args: str):
        super().__init__(InputError.ErrorReason.UNTRAINED_MODEL, *args)


class OutOfRangeError(InputError):
    """
    Thrown when a time or lag lies outside the simulated span

    """

    def __init__(self, *args: str):
        super().__init__(InputError.ErrorReason.OUT_OF_RANGE, *args)


class InvalidHyperparameterError(InputError):
    """
    Thrown when a training or clustering parameter violates its precondition

    """

    def __init__(self, *args: str):
        super().__init__(InputError.ErrorReason.INVALID_VALUE, *args)


class GeometryError(InputError):
    """
    Thrown for degenerate geometry (zero-length direction, coincident terminals, degenerate triangle)

    """

    def __init__(self, *args: str):
        super().__init__(InputError.ErrorReason.INVALID_VALUE, *args)


class NumericFailureError(RuntimeError):
    """
    Thrown when a numerical procedure fails to produce finite results

    """

    EXIT_CODE: int = 3


class TrainingDivergedError(NumericFailureError):
    """
    Thrown when a training loss becomes NaN or infinite

    """

    def __init__(self, model_name: str, step: int, *args: str):
        """
        Create a divergence error

        :param model_name: Which model diverged
        :param step: The epoch (BPNN) or step (GAN) at which the loss stopped being finite

        """

        self.model_name: str = model_name
        self.step: int = step
        super().__init__(f"Training of '{model_name}' diverged at step {step}.", *args)
