"""Exception hierarchy.

Configuration problems derive from :class:`ConfigError`; everything that can go
wrong inside a numerical stage derives from :class:`NumericalError`.  The CLI
maps the two families onto distinct exit codes.
"""


class ResfluorError(Exception):
    """Base class for all package errors."""


class ConfigError(ResfluorError, ValueError):
    """Invalid parameters, unknown keys or malformed input files."""


class NumericalError(ResfluorError, RuntimeError):
    """A numerical stage failed to produce a trustworthy result."""


class ResonantDriveError(ConfigError):
    """Port drive too close to the cavity resonance for the displaced frame."""


class DegenerateSteadyStateError(NumericalError):
    """The generator has more than one stationary state."""


class IntegrationError(NumericalError):
    """The adaptive integrator gave up (step-size underflow)."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class TruncationError(NumericalError):
    """Fock truncation did not converge below the cap."""


class NonStationaryError(NumericalError):
    """A state handed to the regression theorem is not stationary."""


class SpanError(NumericalError):
    """Correlation grid too short for the correlation to decay."""


class AliasingError(NumericalError):
    """Correlation grid too coarse for the requested frequency band."""


class PeriodicStateError(NumericalError):
    """No periodic steady state reached under time-periodic driving."""


class BracketError(NumericalError):
    """Root-finding bracket could not be established."""


class FitError(NumericalError):
    """Least-squares fit failed or the design is degenerate."""


class SubspaceError(NumericalError):
    """Dressed manifolds could not be identified among numeric eigenstates."""
