"""Exception types raised across the package."""


class ConfigurationError(ValueError):
    """Invalid parameters or inconsistent setup (grid too small, bad ranges)."""


class ModeMismatchError(ValueError):
    """Field and grid (or two fields) disagree on the number of modes."""


class DomainError(ValueError):
    """Argument outside the range where a closed form is valid."""


class DegenerateWeightsError(RuntimeError):
    """Importance weights collapsed onto too few samples."""


class IntegrationBlowUp(RuntimeError):
    """A trajectory produced a non-finite or runaway state.

    Attributes
    ----------
    step : int
        Index of the offending step.
    state : numpy.ndarray
        Coefficients just before the failure (copied).
    """

    def __init__(self, message, step=None, state=None):
        super().__init__(message)
        self.step = step
        self.state = state
