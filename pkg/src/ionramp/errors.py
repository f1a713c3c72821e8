"""Exception types shared across the package."""


class IonRampError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(IonRampError):
    """Invalid or unparsable run configuration."""


class EquilibriumError(IonRampError):
    """Equilibrium solve failed to converge; carries the last residual."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class DegenerateModesError(IonRampError):
    """Two normal-mode frequencies coincide too closely to fix a basis."""


class InvalidProtocolError(IonRampError):
    """The requested ansatz would need a transiently inverted trap.

    Raised when the squared trap frequency goes nonpositive somewhere on
    the probe grid. `t_violation` is the first offending time in seconds.
    """

    def __init__(self, message, t_violation=None):
        super().__init__(message)
        self.t_violation = t_violation


class SingularErmakovError(IonRampError):
    """The scaling factor collapsed to zero during integration."""


class IntegrationError(IonRampError):
    """An ODE solve failed (step underflow, tolerance breakdown, ...)."""


class IonCrossingError(IonRampError):
    """Two ions crossed during a lab-frame simulation; the run is invalid."""
