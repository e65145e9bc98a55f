"""Exception types raised across the package."""


class AerobatError(Exception):
    """Base class for all domain errors."""


class GimbalLock(AerobatError):
    """Pitch too close to +/- pi/2 for the ZYX Euler-rate map."""


class NumericalSingularity(AerobatError):
    """A matrix that must be positive definite failed to factor."""


class SingularConfiguration(AerobatError):
    """Linkage closure Jacobian is rank deficient (dead point)."""


class NoConvergence(AerobatError):
    """Newton iteration did not reach tolerance."""


class NonPositiveDt(AerobatError):
    """Time step must be strictly positive."""


class NonFiniteDerivative(AerobatError):
    """An RK4 stage produced NaN or inf."""

    def __init__(self, message, stage=None, t=None, state=None):
        super().__init__(message)
        self.stage = stage
        self.t = t
        self.state = state


class DegenerateSeries(AerobatError):
    """Reference series has zero variance."""


class SchemaMismatch(AerobatError):
    """Log file does not match the expected column layout."""


class UnknownChannel(AerobatError):
    """Requested plot channel does not exist."""


class ConfigError(AerobatError):
    """Invalid configuration; ``key`` holds the dotted path of the offender."""

    def __init__(self, key, reason):
        super().__init__(f"{key}: {reason}")
        self.key = key
        self.reason = reason
