"""Closed-form variance-bound evaluators and measured/bound ratio diagnostics.

The bounds carry existential constants (here c and K, both defaulting to 1
and exposed as knobs), so nothing in this module asserts an absolute
inequality against data.  The useful diagnostic is the ratio of a measured
Var(F_N) to a bound evaluated at K = 1: superconcentration shows up as that
ratio staying bounded (or shrinking) across N.

    slope_remainder_coeff(abs3, t)   (2^(1/3) E|h|^3 + 1) / (1 - t)
    overlap_moment_coeff(...)        K (log sqrt(2)/sqrt(1 - 4 b^2 log(1/(1-t)))
                                        + (E|h|^3 + 1)/(1-t) + E|h|^3)
    variance_bound_general(...)      K (E|h|^3 + 1) N (1 - w(r_N) + 1/log N),
                                     r_N = (log N)^(-c / log N) clamped to [0,1]
    variance_bound_smooth(...)       K (1 + (E|f'(g)|^3)^2) N / log N
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._stats import estimate_variance_jackknife
from .disorder import DisorderSpec, coupling_covariance
from .errors import AdmissibilityError, MissingMomentError
from .interp import replica_free_energy


@dataclass(frozen=True)
class BoundInputs:
    n: int
    beta: float
    abs3: float
    fprime2: float | None = None
    fprime3: float | None = None
    c_const: float = 1.0
    k_const: float = 1.0

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ValueError(f"n must be >= 2, got {self.n}")
        if self.beta <= 0 or self.c_const <= 0 or self.k_const <= 0:
            raise ValueError("beta, c_const, k_const must be positive")
        # power-mean floor: E|h|^3 >= (E h^2)^{3/2} = 1
        if self.abs3 < 1.0 - 1e-8:
            raise ValueError(f"abs3={self.abs3} below the power-mean floor of 1")

    @classmethod
    def from_spec(cls, spec: DisorderSpec, n: int, beta: float,
                  c_const: float = 1.0, k_const: float = 1.0) -> "BoundInputs":
        return cls(n=n, beta=beta, abs3=spec.abs3, fprime2=spec.fprime2,
                   fprime3=spec.fprime3, c_const=c_const, k_const=k_const)


@dataclass(frozen=True)
class BoundReport:
    n: int
    measured_var: float
    var_std_error: float
    rhs_general: float
    ratio_general: float
    rhs_smooth: float | None = None
    ratio_smooth: float | None = None


@dataclass(frozen=True)
class GapBoundReport:
    """1 - w(t) against (1 - t) E f'(g)^2."""

    t: float
    lhs: float
    rhs: float
    holds: bool


def slope_remainder_coeff(abs3: float, t: float) -> float:
    """(2^(1/3) E|h|^3 + 1) / (1 - t); diverges at t = 1."""
    if not (0.0 <= t < 1.0):
        raise ValueError(f"t must lie in [0, 1), got {t}")
    return (2.0 ** (1.0 / 3.0) * abs3 + 1.0) / (1.0 - t)


def overlap_admissible(beta: float, t: float) -> bool:
    """True when 4 beta^2 log(1/(1-t)) < 1 (the small-t overlap bound applies)."""
    if not (0.0 <= t < 1.0):
        return False
    return 4.0 * beta * beta * math.log(1.0 / (1.0 - t)) < 1.0


def overlap_moment_coeff(abs3: float, beta: float, t: float, k_const: float = 1.0) -> float:
    """Coefficient of 1/sqrt(N) bounding E<R^2>_t at admissible (beta, t)."""
    if not (0.0 <= t < 1.0):
        raise ValueError(f"t must lie in [0, 1), got {t}")
    u = 4.0 * beta * beta * math.log(1.0 / (1.0 - t))
    if u >= 1.0:
        raise AdmissibilityError(
            f"4 beta^2 log(1/(1-t)) = {u:.4f} >= 1: outside the admissible region")
    return k_const * (math.log(math.sqrt(2.0) / math.sqrt(1.0 - u))
                      + (abs3 + 1.0) / (1.0 - t) + abs3)


def interpolation_radius(n: float, c_const: float = 1.0) -> float:
    """r_N = (log N)^(-c/log N), clamped to [0, 1] (log N < 1 pushes it above 1)."""
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    log_n = math.log(n)
    r = log_n ** (-c_const / log_n)
    return min(max(r, 0.0), 1.0)


def variance_bound_general(inputs: BoundInputs, spec: DisorderSpec) -> float:
    """K (E|h|^3 + 1) N (1 - w(r_N) + 1/log N): needs only a finite third moment."""
    r_n = interpolation_radius(inputs.n, inputs.c_const)
    w_r = coupling_covariance(spec, r_n)
    return (inputs.k_const * (inputs.abs3 + 1.0) * inputs.n
            * (1.0 - w_r + 1.0 / math.log(inputs.n)))


def variance_bound_smooth(inputs: BoundInputs) -> float:
    """K (1 + (E|f'(g)|^3)^2) N / log N: needs an absolutely continuous transform."""
    if inputs.fprime3 is None:
        raise MissingMomentError("E|f'(g)|^3 is required for the smooth-transform bound")
    return (inputs.k_const * (1.0 + inputs.fprime3 ** 2)
            * inputs.n / math.log(inputs.n))


def covariance_gap_bound(spec: DisorderSpec, t: float) -> GapBoundReport:
    """Check 1 - w(t) <= (1 - t) E f'(g)^2 (equality for the identity transform)."""
    if spec.fprime2 is None:
        raise MissingMomentError("E f'(g)^2 is required for the covariance gap bound")
    lhs = 1.0 - coupling_covariance(spec, t)
    rhs = (1.0 - t) * spec.fprime2
    return GapBoundReport(t=t, lhs=lhs, rhs=rhs, holds=lhs <= rhs + 1e-6)


def measured_variances(spec: DisorderSpec, beta: float, n_list, replicas: int,
                       seed: int, field_r: float = 0.0):
    """Plug-in Var(F_N) with jackknife errors, per N (serial reference path)."""
    out = []
    for n in n_list:
        vals = np.array([replica_free_energy(spec, n, beta, seed, r, field_r)
                         for r in range(replicas)])
        out.append(estimate_variance_jackknife(vals))
    return out


def bound_ratio_study(spec: DisorderSpec, beta: float, n_list, c_const: float,
                      replicas: int, seed: int, k_const: float = 1.0,
                      field_r: float = 0.0) -> list[BoundReport]:
    """Measured Var(F_N) against both bounds at K = 1 (ratios, never pass/fail)."""
    reports = []
    for n, est in zip(n_list, measured_variances(spec, beta, n_list, replicas,
                                                 seed, field_r)):
        inputs = BoundInputs.from_spec(spec, n, beta, c_const=c_const, k_const=k_const)
        rhs_gen = variance_bound_general(inputs, spec)
        rhs_smooth = ratio_smooth = None
        if spec.fprime3 is not None:
            rhs_smooth = variance_bound_smooth(inputs)
            ratio_smooth = est["var"] / rhs_smooth
        reports.append(BoundReport(
            n=n, measured_var=est["var"], var_std_error=est["std_error"],
            rhs_general=rhs_gen, ratio_general=est["var"] / rhs_gen,
            rhs_smooth=rhs_smooth, ratio_smooth=ratio_smooth,
        ))
    return reports
