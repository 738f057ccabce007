"""Scalar and bivariate Gaussian numerics.

Everything downstream reduces expectations over a standard normal g (or a
correlated pair of them) to one of the primitives here:

    E f(g)            -> Gauss-Hermite rule rescaled to the N(0,1) weight
    E fa(X) fb(Y)     -> rank-1 decomposition X = sqrt(t) G + sqrt(1-t) G',
                         Y = sqrt(t) G + sqrt(1-t) G'' over nested 1-D rules
    Phi, Phi^{-1}     -> erfc-based CDF and a rational quantile with one
                         Halley correction step

Gauss-Hermite converges super-exponentially for smooth integrands but only
algebraically across kinks or jumps; the absolute-value inequality verifier
therefore integrates adaptively (Gauss-Kronrod) instead of with a fixed rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.polynomial.hermite import hermgauss
from scipy.integrate import quad
from scipy.special import erfc as _erfc_array

from .errors import EvaluationError

MAX_RULE_ORDER = 200

# |x| beyond this carries < 1e-31 standard-normal mass; used to cut the
# adaptive integrals to a finite interval.
_TAIL_CUT = 12.0

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes/weights for expectations against the standard normal.

    weights sum to 1; the rule integrates polynomials of degree <= 2*order - 1
    exactly.
    """

    nodes: np.ndarray
    weights: np.ndarray
    order: int

    def expect(self, f: Callable[[np.ndarray], np.ndarray]) -> float:
        """Quadrature estimate of E f(g)."""
        vals = np.asarray(f(self.nodes), dtype=float)
        return float(np.dot(self.weights, vals))


@dataclass(frozen=True)
class BivariateGaussianParams:
    """Correlation of a standard bivariate normal pair."""

    correlation: float

    def __post_init__(self) -> None:
        if not (-1.0 <= self.correlation <= 1.0):
            raise ValueError(f"correlation must lie in [-1, 1], got {self.correlation}")


def std_normal_pdf(x):
    return _INV_SQRT_2PI * np.exp(-0.5 * np.square(x))


def std_normal_cdf(x):
    """Phi(x) via the complementary error function (abs error ~1e-16)."""
    if np.isscalar(x):
        return 0.5 * math.erfc(-x / _SQRT2)
    return 0.5 * _erfc_array(-np.asarray(x) / _SQRT2)


# Acklam's rational approximation to Phi^{-1}; |error| < 1.15e-9 on (0,1),
# then one Halley step pushes it to full double precision.
_ACKLAM_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
             1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_ACKLAM_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
             6.680131188771972e+01, -1.328068155288572e+01)
_ACKLAM_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
             -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_ACKLAM_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
             3.754408661907416e+00)


def _acklam(p: float) -> float:
    a, b, c, d = _ACKLAM_A, _ACKLAM_B, _ACKLAM_C, _ACKLAM_D
    p_low, p_high = 0.02425, 1.0 - 0.02425
    if p < p_low:
        q = math.sqrt(-2.0 * math.log(p))
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / \
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0)
    if p > p_high:
        q = math.sqrt(-2.0 * math.log(1.0 - p))
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / \
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0)
    q = p - 0.5
    r = q * q
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q / \
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0)


def std_normal_quantile(p: float) -> float:
    """Phi^{-1}(p) for p in (0,1); raises ValueError outside the open interval."""
    if not (0.0 < p < 1.0):
        raise ValueError(f"p must lie in (0, 1), got {p}")
    x = _acklam(p)
    # Halley step on Phi(x) - p = 0 (second-order correction; one step gives
    # full double precision from the rational starting point).
    err = std_normal_cdf(x) - p
    u = err / std_normal_pdf(x)
    x -= u / (1.0 + 0.5 * x * u)
    return x


def gauss_hermite_rule(order: int) -> QuadratureRule:
    """Gauss-Hermite rule rescaled so that sum(w * f(z)) ~ E f(g)."""
    if not (1 <= order <= MAX_RULE_ORDER):
        raise ValueError(f"order must lie in [1, {MAX_RULE_ORDER}], got {order}")
    x, w = hermgauss(order)
    return QuadratureRule(nodes=_SQRT2 * x, weights=w / math.sqrt(math.pi), order=order)


DEFAULT_RULE_ORDER = 64


def default_rule() -> QuadratureRule:
    return gauss_hermite_rule(DEFAULT_RULE_ORDER)


def _eval_checked(f, x, name: str) -> np.ndarray:
    vals = np.asarray(f(x), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise EvaluationError(f"{name} produced non-finite values on quadrature nodes")
    return vals


def expect_bivariate(fa: Callable, fb: Callable,
                     params: BivariateGaussianParams,
                     rule: QuadratureRule | None = None) -> float:
    """Tensor-quadrature estimate of E fa(X) fb(Y), (X, Y) standard bivariate normal.

    Uses X = a*G + b*G', Y = s*a*G + b*G'' with a = sqrt(|rho|), b = sqrt(1-|rho|),
    s = sign(rho), so only the two inner conditional expectations are tabulated
    (cost O(order^2)).  Near-singular |rho| is clamped to 1 - 1e-12; accuracy
    degrades to ~5e-3 for discontinuous integrands (sign, steps) -- callers
    with such transforms should prefer closed forms.
    """
    if rule is None:
        rule = default_rule()
    rho = params.correlation
    s = 1.0 if rho >= 0 else -1.0
    m = min(abs(rho), 1.0 - 1e-12)
    a, b = math.sqrt(m), math.sqrt(1.0 - m)
    g = rule.nodes
    # grid over (shared node i, independent node j)
    xa = a * g[:, None] + b * g[None, :]
    xb = s * a * g[:, None] + b * g[None, :]
    inner_a = _eval_checked(fa, xa, "fa") @ rule.weights
    inner_b = _eval_checked(fb, xb, "fb") @ rule.weights
    return float(np.dot(rule.weights, inner_a * inner_b))


@dataclass(frozen=True)
class PsiInequalityReport:
    lhs: float
    rhs: float
    holds: bool


def _sign_change_points(f, lo: float, hi: float, n: int = 4096) -> list[float]:
    """Grid-detected sign changes of f on [lo, hi], as quadrature break points."""
    xs = np.linspace(lo, hi, n)
    vals = np.asarray(f(xs), dtype=float)
    sgn = np.sign(vals)
    idx = np.nonzero(sgn[:-1] * sgn[1:] < 0)[0]
    return [0.5 * (xs[i] + xs[i + 1]) for i in idx]


def verify_abs_psi_inequality(psi: Callable, psi_prime: Callable,
                              rule: QuadratureRule | None = None) -> PsiInequalityReport:
    """Check E |psi(g)| psi'(g) <= (1/2) E |g| psi(g)^2 for a differentiable psi.

    The rule gates admissibility (psi, psi' must be finite on its nodes); the
    two expectations themselves are integrated adaptively with break points at
    detected sign changes of psi, because |psi| kinks defeat fixed Hermite
    rules by many orders of magnitude.
    """
    if rule is None:
        rule = default_rule()
    _eval_checked(psi, rule.nodes, "psi")
    _eval_checked(psi_prime, rule.nodes, "psi'")

    lo, hi = -_TAIL_CUT, _TAIL_CUT
    breaks = sorted(set([0.0] + _sign_change_points(psi, lo, hi)))

    def integrate(f):
        val, _ = quad(f, lo, hi, points=breaks, limit=400, epsabs=1e-13, epsrel=1e-13)
        return val

    lhs = integrate(lambda x: abs(psi(x)) * psi_prime(x) * float(std_normal_pdf(x)))
    rhs = 0.5 * integrate(lambda x: abs(x) * psi(x) ** 2 * float(std_normal_pdf(x)))
    if not (math.isfinite(lhs) and math.isfinite(rhs)):
        raise EvaluationError("psi inequality integrands are not integrable")
    tol = 1e-8 * (1.0 + abs(rhs))
    return PsiInequalityReport(lhs=lhs, rhs=rhs, holds=lhs <= rhs + tol)
