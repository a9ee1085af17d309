"""Exception types shared across the solver suite."""


class GmsError(Exception):
    """Base class for all errors raised by this package."""


class GridError(GmsError, ValueError):
    """Invalid grid construction parameters."""


class InvalidMetricError(GmsError, ValueError):
    """Conformal factor sampled non-positive or non-finite."""


class DegreeError(GmsError, ValueError):
    """Cochain degree outside the operation's domain."""


class ModelDomainError(GmsError, ValueError):
    """Density model returned a non-finite value on the probed range."""


class NonConvergenceError(GmsError, RuntimeError):
    """Iteration cap exceeded before reaching the requested tolerance.

    Carries the last iterate and residual so callers can inspect partial
    progress; partial results are never returned silently.
    """

    def __init__(self, message, residual=None, last_iterate=None):
        super().__init__(message)
        self.residual = residual
        self.last_iterate = last_iterate


class SolverInternalError(GmsError, RuntimeError):
    """Invariant violated inside a solver (e.g. negative curvature in CG)."""


class SupercriticalError(GmsError, ValueError):
    """Requested constant at or beyond the critical value of the metric."""


class NoSolutionError(GmsError, ValueError):
    """Requested class scale at or beyond the critical scale: no minimizer."""


class PrecisionError(GmsError, RuntimeError):
    """Quadrature failed to reach the requested tolerance."""


class ConfigError(GmsError, ValueError):
    """Experiment configuration failed validation.

    ``diagnostics`` is a list of human-readable messages, each prefixed with
    the config field path it refers to.
    """

    def __init__(self, diagnostics):
        super().__init__("; ".join(diagnostics))
        self.diagnostics = list(diagnostics)
