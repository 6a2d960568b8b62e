"""Exception types raised across the package."""


class FilterbankError(ValueError):
    """Base class for all errors raised by fbrewire."""


class OddLengthError(FilterbankError):
    pass


class LengthMismatchError(FilterbankError):
    pass


class LengthError(FilterbankError):
    pass


class DepthError(FilterbankError):
    pass


class DepthMismatchError(FilterbankError):
    pass


class IncompleteSubbandSetError(FilterbankError):
    pass


class ProvenanceError(FilterbankError):
    """Two subband sets that should share a signal, filterbank and depth do not."""


class PerfectReconstructionError(FilterbankError):
    """A filterbank failed its perfect-reconstruction check."""


class NoComplementParamsError(FilterbankError):
    pass


class SupportConflictError(FilterbankError):
    pass


class NormalizationError(FilterbankError):
    pass


class DegenerateSubbandError(FilterbankError):
    pass


class ConfigError(FilterbankError):
    """Bad or inconsistent configuration (CLI, JSON configs)."""


class FormatError(FilterbankError):
    """Malformed input file."""
