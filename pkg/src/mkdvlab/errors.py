class ParameterError(ValueError):
    """A parameter lies outside the range an operation supports."""


class DataError(ValueError):
    """Field data is malformed (non-finite samples, broken symmetry, wrong length)."""


class DiagnosticError(ValueError):
    """A diagnostic cannot be evaluated on the supplied input."""


class BlowUpError(RuntimeError):
    """The solution left the finite range during time stepping.

    ``time`` is the simulation time at which the failure was detected and
    ``trajectory`` holds whatever was recorded before it (may be ``None``).
    """

    def __init__(self, message, time, trajectory=None):
        super().__init__(message)
        self.time = time
        self.trajectory = trajectory

    def __reduce__(self):
        return type(self), (self.args[0], self.time, self.trajectory)


class SweepError(RuntimeError):
    def __init__(self, message, epsilon):
        super().__init__(message)
        self.epsilon = epsilon

    def __reduce__(self):
        return type(self), (self.args[0], self.epsilon)


class ConfigError(ParameterError):
    """An experiment configuration document is malformed or out of range."""
