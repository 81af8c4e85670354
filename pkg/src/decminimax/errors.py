"""Shared exception types."""


class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""


class NotPSDError(ValueError):
    """Matrix expected to be positive semi-definite is not."""


class EigConvergenceError(RuntimeError):
    """Eigensolver failed to converge within the sweep cap."""

    def __init__(self, msg, residual=None):
        super().__init__(msg)
        self.residual = residual


class DegenerateModeError(RuntimeError):
    """A non-principal eigenmode has a zero mixing-gap eigenvalue."""


class DivergenceError(RuntimeError):
    """Iterates became non-finite or exceeded the magnitude guard."""

    def __init__(self, msg, round_index=None, max_entry=None, partial=None):
        super().__init__(msg)
        self.round_index = round_index
        self.max_entry = max_entry
        self.partial = partial


class AscentCapError(RuntimeError):
    """Inner maximization did not reach tolerance within the step cap."""

    def __init__(self, msg, residual=None):
        super().__init__(msg)
        self.residual = residual
