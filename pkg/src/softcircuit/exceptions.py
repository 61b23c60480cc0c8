from typing import Union


class ValidationError(ValueError):
    """
    Raised when an input violates a documented precondition. Subclasses ValueError so
    callers that only know about ValueError still catch it.
    """


class ConservationError(ValidationError):
    """
    Raised when a mass ledger's outputs do not add up to its input within tolerance.
    """


class ParseError(ValidationError):
    """
    Raised for malformed telemetry payloads, log files and CSV inputs.

    Attributes:
        line_number (int): 1-based line number of the offending line, None if unknown.
    """

    def __init__(self, message: str, line_number: Union[int, None] = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class ConfigError(ValidationError):
    """
    Raised when a run configuration does not match its schema.

    Attributes:
        pointer (str): JSON pointer to the first offending value, e.g. "/coldchain/threshold_c".
    """

    def __init__(self, message: str, pointer: str = ""):
        self.pointer = pointer
        super().__init__(f"{pointer or '/'}: {message}")


class UsageError(Exception):
    """
    Raised by the command line parser for unknown subcommands or bad arguments.
    """
