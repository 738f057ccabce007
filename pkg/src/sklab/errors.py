"""Semantic exception hierarchy shared across the package."""


class SKLabError(Exception):
    """Base class for all package-specific errors."""


class EvaluationError(SKLabError):
    """An integrand or transform produced a non-finite value."""


class DegenerateDisorderError(SKLabError):
    """A disorder transform has (numerically) zero variance and cannot be standardized."""


class DerivativeUnavailableError(SKLabError):
    """The requested operation needs a pointwise derivative the disorder does not have."""


class SizeLimitError(SKLabError):
    """System size exceeds the exact-enumeration (or pair-enumeration) cap."""


class AdmissibilityError(SKLabError):
    """Parameters lie outside the admissible region of a bound."""


class MissingMomentError(SKLabError):
    """A derivative moment required by an evaluator is not available for this disorder."""


class TooFewSamplesError(SKLabError):
    """Not enough samples for the requested resampling estimator."""


class ConfigError(SKLabError):
    """Experiment configuration could not be parsed or validated."""
