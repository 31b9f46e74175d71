"""Exception types shared across the package."""


class SigtError(Exception):
    """Base class for all package-specific errors."""


class DimensionError(SigtError):
    """Operand shapes are incompatible for the requested operation."""


class ConfigError(SigtError):
    """A configuration value violates its invariants."""


class FrameError(SigtError):
    """A time/frequency grid does not match the frame layout."""


class DomainError(SigtError):
    """Input values are outside the operation's domain (e.g. non-binary bits)."""


class RankError(SigtError):
    """A matrix that must be invertible is (numerically) singular."""


class ContractError(SigtError):
    """An API contract was violated (e.g. backward() on a non-scalar)."""


class DataError(SigtError):
    """A dataset/checkpoint file is missing, corrupt, or incompatible."""


class NumericError(SigtError):
    """A numeric failure occurred (non-finite loss, diverged run)."""
