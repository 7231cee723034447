"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class GovDiscError(Exception):
    exit_code = 1


class ConfigError(GovDiscError):
    exit_code = 2


class SchemaError(ConfigError):
    """A mandatory column or key is missing or malformed."""

    def __init__(self, name, message=None):
        self.name = name
        super().__init__(message or f"missing mandatory column {name!r}")


class FormatError(ConfigError):
    """Unknown model-file format id or version."""


class DataError(GovDiscError):
    exit_code = 3


class SegmentationError(DataError):
    pass


class RangeError(DataError):
    pass


class MetricError(DataError):
    pass


class CorruptionError(DataError):
    """Model file checksum does not match its body."""


class NumericalError(GovDiscError):
    exit_code = 4


class BigMViolation(NumericalError):
    """A refit coefficient exceeds the big-M bound."""


class DivergenceError(NumericalError):
    pass
