"""Numerical laboratory for free-energy fluctuations in the SK model.

Couplings are i.i.d. copies of a standardized disorder h = f(g) (g standard
normal, f nondecreasing); the package provides the disorder families and
their coupling covariance w(t), exact small-N thermodynamics, correlated
interpolation estimators, closed-form variance-bound evaluators, and a
config-driven experiment harness with a CLI front end.
"""

__version__ = "0.1.0"

from . import bounds, disorder, experiments, gaussian, interp, sk  # noqa: F401
