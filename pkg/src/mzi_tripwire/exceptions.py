"""Exception hierarchy for the tripwire simulator."""


class TripwireError(Exception):
    """Base class for all simulator errors."""


class NonPositiveBeta(TripwireError, ValueError):
    """The Gaussian wavepacket width parameter is not positive."""


class GridTooCoarse(TripwireError, ValueError):
    """Quadrature grid does not resolve the wavepacket envelope."""


class HeraldsTooClose(TripwireError, ValueError):
    """Two heralds are closer than the wavepacket separation condition allows."""


class ProbabilityOverflow(TripwireError, ArithmeticError):
    """A computed click probability fell outside [0, 1]."""


class ScheduleExhausted(TripwireError, IndexError):
    """The phase schedule has fewer entries than there are heralds."""


class ScheduleMismatch(TripwireError, ValueError):
    """Records and phase schedule do not index-align."""


class NonBinaryPhase(TripwireError, ValueError):
    """A QRNG corner phase is not 0 or pi."""


class EmptyCalibration(TripwireError, ValueError):
    """Calibration was requested on an empty record set."""


class InsufficientData(TripwireError, RuntimeError):
    """Not enough heralds have been processed to make a decision."""


class ConfigError(TripwireError, ValueError):
    """Invalid scenario configuration."""
