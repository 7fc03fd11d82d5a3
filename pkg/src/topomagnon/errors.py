"""Exception hierarchy shared by all modules."""


class TopoMagnonError(Exception):
    """Base class for every error raised by this package."""


class ConfigurationError(TopoMagnonError, ValueError):
    pass


class RegimeError(TopoMagnonError, ValueError):
    """Operation requires the topological regime (J1 < J2) or a gapped chain."""


class GapClosureError(RegimeError):
    """Bulk gap closes (J1 == J2); topology is undefined."""


class InputError(TopoMagnonError, ValueError):
    pass


class NoiseModelError(TopoMagnonError, ValueError):
    pass


class DomainError(TopoMagnonError, ValueError):
    pass


class DetunedDriveError(TopoMagnonError, ValueError):
    """Drive frequency does not bridge the bond's detuning."""

    def __init__(self, message, detuning):
        super().__init__(message)
        self.detuning = detuning


class InconclusiveWindowError(TopoMagnonError, RuntimeError):
    pass


class CalibrationError(TopoMagnonError, ValueError):
    pass


class UnreachableCouplingError(ConfigurationError):
    def __init__(self, message, maximum):
        super().__init__(message)
        self.maximum = maximum


class OutputError(TopoMagnonError, OSError):
    """Output directory missing, not a directory, or not writable."""
