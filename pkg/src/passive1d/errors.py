"""Error taxonomy shared by all passive1d modules.

Each class marks one failure category so callers (and the CLI) can react to
the category without parsing messages.
"""


class Passive1DError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(Passive1DError, ValueError):
    """Evaluation point or spectral parameter outside the valid domain."""


class ResolutionError(Passive1DError, ValueError):
    """Grid too coarse for the requested operation."""


class ValidationError(Passive1DError, ValueError):
    """Input violates a structural precondition (support, positivity, shape)."""


class StabilityError(Passive1DError, ValueError):
    """Time-stepping parameters violate a stability bound."""


class RangeLimitError(Passive1DError, ValueError):
    """Spectral parameter beyond the documented overflow-safe range."""


class SpectralError(Passive1DError, ValueError):
    """Value is not an eigenvalue (or an eigen-solve failed to certify one)."""


class ApplicabilityError(Passive1DError, ValueError):
    """Data does not satisfy the assumptions of the requested transform."""


class MatchingError(Passive1DError, ValueError):
    """Ambiguous eigenvalue matching between two mode sets."""


class ReconstructionError(Passive1DError, RuntimeError):
    """A coefficient reconstruction left its admissible set (blow-up, sign loss)."""


class OptimizationError(Passive1DError, RuntimeError):
    """Iterative solver diverged or stagnated above tolerance."""


class ConditioningError(Passive1DError, RuntimeError):
    """Problem under-determined with no regularization to fix it."""


class ConsistencyError(Passive1DError, RuntimeError):
    """Two internal estimates of the same quantity disagree beyond tolerance."""


class DataError(Passive1DError, ValueError):
    """No usable data left after filtering (e.g. all modes below confidence)."""


class ConfigError(Passive1DError, ValueError):
    """Malformed experiment configuration."""
