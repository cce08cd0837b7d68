"""Exception types shared across the package."""


class RqugeError(Exception):
    """Base class for all package errors."""


class DatasetParseError(RqugeError):
    """A JSONL line could not be parsed."""


class ValidationError(RqugeError):
    """A record or value violates a schema or type invariant."""


class ReferenceRequiredError(RqugeError):
    """A reference-based metric was called on an instance without a reference question."""


class RunnerError(RqugeError):
    """A model backend call failed."""


class ConfigurationError(RqugeError):
    """A runner, adapter, or config entry is missing or malformed."""


class UndefinedStatisticError(RqugeError):
    """The requested statistic is undefined for the given input (e.g. constant vectors)."""
