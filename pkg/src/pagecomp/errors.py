"""Exception types shared across the package.

The CLI maps these onto exit codes: ConfigurationError -> 2 (usage),
InputFormatError and subclasses -> 3 (data format), OSError -> 1 (I/O).
"""


class PagecompError(Exception):
    """Base class for all package errors."""


class ConfigurationError(PagecompError):
    """Invalid configuration value or unknown switch."""


class InputFormatError(PagecompError):
    """Malformed input data (records, offsets, binary tables)."""


class OutOfVocabularyError(InputFormatError):
    """Token id outside a table-backed embedding vocabulary."""


class TableFormatError(InputFormatError):
    """Embedding table file with a bad magic, header, or truncated payload."""


class GenerationError(ConfigurationError):
    """Synthetic case generation cannot satisfy the requested parameters."""
