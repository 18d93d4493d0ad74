"""Exception taxonomy shared by the library, service and CLI.

Exit codes and HTTP mapping key off the ``kind`` attribute:
config errors -> exit 2 / HTTP 400, data errors -> exit 3 / HTTP 422,
anything else -> exit 4 / HTTP 500.
"""


class CapVQAError(Exception):
    kind = "runtime"
    exit_code = 4


class ConfigError(CapVQAError):
    """Invalid configuration or incompatible options."""

    kind = "config"
    exit_code = 2


class DataError(CapVQAError):
    """Problems with dataset or prediction files."""

    kind = "data"
    exit_code = 3


class ParseError(DataError):
    """File could not be parsed as the documented format."""


class ValidationError(DataError):
    """Parsed content violates a record invariant."""


class JoinError(DataError):
    """Questions, annotations and captions cannot be joined."""


class FusionError(DataError):
    """Prediction distributions are not defined over the same vocabulary."""


class NumericError(CapVQAError):
    """Non-finite values where finite numerics are required."""


class AdapterError(CapVQAError):
    """A model adapter failed; the message names the adapter."""

    def __init__(self, adapter_name, message):
        super().__init__(f"adapter '{adapter_name}': {message}")
        self.adapter_name = adapter_name
