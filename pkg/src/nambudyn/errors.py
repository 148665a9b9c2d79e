"""Exception types shared across the package."""


class NambuError(Exception):
    """Base class for package errors."""


class DimensionMismatch(NambuError):
    """Operands have incompatible shapes or subsystem dimensions."""


class NonHermitianInput(NambuError):
    """A matrix required to be Hermitian exceeds the Hermiticity tolerance."""


class OddCount(NambuError):
    """An operation requiring an even number of arguments got an odd one."""


class UnsupportedCombination(NambuError):
    """Generators cannot be combined in the requested linear space."""


class NonPositiveDensity(NambuError):
    """A diagonal density value fell below the positivity floor."""


class SeriesDiverging(NambuError):
    """Formal series terms stopped decreasing before the requested order."""


class StepRejected(NambuError):
    """The adaptive integrator could not meet its error target."""


class NonFiniteState(NambuError):
    """State entries became NaN or infinite during integration."""


class UnknownDemo(NambuError):
    """Requested demo name is not in the registry."""


class ConfigError(NambuError):
    """A scenario configuration failed schema or semantic validation."""
