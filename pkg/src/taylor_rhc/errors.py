"""Exception hierarchy. Every error raised by the package derives from ``RhcError``."""


class RhcError(Exception):
    pass


class InvalidSystemError(RhcError, ValueError):
    pass


class InvalidInputError(RhcError, ValueError):
    pass


class NumericalError(RhcError, ArithmeticError):
    pass


class NoStabilizingSolutionError(NumericalError):
    def __init__(self, message, eigenvalue=None):
        super().__init__(message)
        self.eigenvalue = eigenvalue


class ConvergenceError(NumericalError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class DegenerateSpectrumError(NumericalError):
    pass


class DivergenceError(NumericalError):
    def __init__(self, message, node=None, window=None):
        super().__init__(message)
        self.node = node
        self.window = window


class ReferenceUnstableError(NumericalError):
    def __init__(self, message, difference, norm):
        super().__init__(message)
        self.difference = difference
        self.norm = norm


class PartialResultError(NumericalError):
    """A receding-horizon run stopped at an unconverged window.

    ``windows`` holds the per-window records completed before the failure.
    """

    def __init__(self, message, windows):
        super().__init__(message)
        self.windows = windows
