"""Exception hierarchy shared across the toolkit.

Each class carries the CLI exit code used when it escapes to the
command-line entry point.
"""


class CutoffProbeError(Exception):
    exit_code = 1


class ConfigError(CutoffProbeError):
    """Bad flags, config files, or parameter combinations."""

    exit_code = 2


class DataError(CutoffProbeError):
    """Missing or malformed input data (files, records, corpora)."""

    exit_code = 3


class ProviderError(CutoffProbeError):
    """A token-scoring provider failed or returned garbage."""

    exit_code = 4


class DegenerateSeriesError(CutoffProbeError):
    """All monthly aggregates are equal, so min-max scaling is undefined."""

    exit_code = 5


class IndexFormatError(CutoffProbeError):
    """Persisted index directory has an incompatible format version."""

    exit_code = 6
