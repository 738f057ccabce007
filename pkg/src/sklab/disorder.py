"""Disorder families represented as transforms h = f(g) of a standard Gaussian.

A disorder is a nondecreasing (or at least absolutely continuous) transform f
standardized so that E f(g) = 0 and E f(g)^2 = 1.  The family's fingerprint is
its coupling covariance

    w(t) = E f(G1) f(G2),   (G1, G2) standard bivariate normal, correlation t,

which interpolates between independence (t = 0) and identity (t = 1, where
w(1) = E h^2 = 1).  Closed forms are installed where the generic tensor
quadrature would lose accuracy (steps, boundary kinks):

    gaussian   w(t) = t
    uniform    w(t) = (6/pi) asin(t/2)
    two-point  w(t) = 1 - (a-b)^2 * split_probability(p, t)

Construction moments (mean, variance, E|h|^3, derivative moments) are computed
by adaptive quadrature with break points at the transform's kinks, so that the
standardization contract holds to ~1e-12 even for clipped or stepped f.
"""

from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import IntegrationWarning, quad

from .errors import DegenerateDisorderError, DerivativeUnavailableError
from .gaussian import (
    BivariateGaussianParams,
    QuadratureRule,
    expect_bivariate,
    gauss_hermite_rule,
    std_normal_cdf,
    std_normal_pdf,
    std_normal_quantile,
)

_TAIL_CUT = 13.0
_STANDARDIZATION_TOL = 1e-8
_VARIANCE_FLOOR = 1e-12

# defaults for the bounded-then-smoothed pipeline used on general disorders
DEFAULT_TRUNCATION = 8.0
DEFAULT_MOLLIFICATION = 16


@dataclass(frozen=True)
class Moments:
    mean: float
    variance: float
    abs3: float


@dataclass(frozen=True)
class DisorderSpec:
    """A standardized disorder h = f(g) plus everything evaluators need.

    fprime is None for step transforms (no pointwise derivative); fprime2 and
    fprime3 are E f'(g)^2 and E |f'(g)|^3 when they exist.  breakpoints list
    kink/jump locations of f used as adaptive-quadrature hints.
    """

    kind: str
    params: dict
    f: Callable
    fprime: Callable | None
    moments: Moments
    fprime2: float | None = None
    fprime3: float | None = None
    w_closed: Callable | None = None
    wprime_closed: Callable | None = None
    breakpoints: tuple = ()
    label: str = ""
    # constructor lineage in config-grammar keys (kind, p, truncate_n,
    # mollify_k); None when the spec is not expressible in the grammar
    recipe: dict | None = None

    def __post_init__(self) -> None:
        m = self.moments
        if abs(m.mean) > _STANDARDIZATION_TOL:
            raise ValueError(f"disorder not centered: mean={m.mean:.3e}")
        if abs(m.variance - 1.0) > _STANDARDIZATION_TOL:
            raise ValueError(f"disorder not standardized: var={m.variance:.6e}")
        if not math.isfinite(m.abs3):
            raise ValueError("E|h|^3 must be finite")
        # power-mean: E|h|^3 >= (E h^2)^{3/2} = 1
        if m.abs3 < 1.0 - _STANDARDIZATION_TOL:
            raise ValueError(f"E|h|^3={m.abs3:.6e} violates the power-mean floor of 1")

    @property
    def abs3(self) -> float:
        return self.moments.abs3

    @property
    def is_step(self) -> bool:
        return self.fprime is None

    def config_fragment(self) -> str:
        """Plain-text form; parseable by spec_from_fragment when a recipe exists."""
        if self.recipe is not None:
            order = ("kind", "p", "truncate_n", "mollify_k")
            return ", ".join(f"{k}={self.recipe[k]}" for k in order if k in self.recipe)
        items = ", ".join(f"{k}={v}" for k, v in self.params.items())
        return f"kind={self.kind}" + (f", {items}" if items else "")


@dataclass(frozen=True)
class DisorderMatrix:
    """Realized couplings plus the Gaussian seeds they were transformed from."""

    spec: DisorderSpec
    n: int
    seed: int
    gaussians: np.ndarray
    couplings: np.ndarray


@dataclass(frozen=True)
class CovarianceProfile:
    t_grid: np.ndarray
    w_values: np.ndarray
    wprime_values: np.ndarray

    def validate(self, tol: float = 1e-7) -> None:
        if np.any(np.diff(self.w_values) < -2 * tol):
            raise ValueError("coupling covariance must be nondecreasing in t")
        at_one = np.isclose(self.t_grid, 1.0)
        if np.any(np.abs(self.w_values[at_one] - 1.0) > tol):
            raise ValueError("w(1) must equal 1")
        if np.any(self.wprime_values * (1.0 - self.t_grid) > 1.0 + tol):
            raise ValueError("w'(t) (1-t) must stay below 1")


def _expect(f: Callable, breakpoints=()) -> float:
    """Adaptive E f(g); break points split the integral at f's kinks."""
    lo, hi = -_TAIL_CUT, _TAIL_CUT
    pts = sorted({0.0, *breakpoints})
    with warnings.catch_warnings():
        # the 1e-12 target occasionally hits the roundoff floor on kinked
        # integrands; achieved accuracy is pinned by closed forms in tests
        warnings.simplefilter("ignore", IntegrationWarning)
        val, _ = quad(lambda x: float(f(x)) * float(std_normal_pdf(x)),
                      lo, hi, points=pts, limit=400, epsabs=1e-12, epsrel=1e-12)
    return val


def _standardized_moments(f: Callable, breakpoints=()) -> Moments:
    return Moments(mean=_expect(f, breakpoints),
                   variance=_expect(lambda x: f(x) ** 2, breakpoints),
                   abs3=_expect(lambda x: abs(f(x)) ** 3, breakpoints))


def _standardize(raw: Callable, breakpoints=()) -> tuple[Callable, float, float]:
    """Return (standardized f, shift, scale) with E f = 0, E f^2 = 1."""
    m = _expect(raw, breakpoints)
    var = _expect(lambda x: (raw(x) - m) ** 2, breakpoints)
    if var < _VARIANCE_FLOOR:
        raise DegenerateDisorderError(
            f"transform variance {var:.3e} below the {_VARIANCE_FLOOR:.0e} floor")
    s = math.sqrt(var)
    return (lambda x: (raw(x) - m) / s), m, s


def make_gaussian() -> DisorderSpec:
    """The identity transform: h = g."""
    abs3 = 2.0 * math.sqrt(2.0 / math.pi)  # E|g|^3
    return DisorderSpec(
        kind="gaussian", params={},
        f=lambda x: np.asarray(x, dtype=float),
        fprime=lambda x: np.ones_like(np.asarray(x, dtype=float)),
        moments=Moments(0.0, 1.0, abs3),
        fprime2=1.0, fprime3=1.0,
        w_closed=lambda t: float(t),
        wprime_closed=lambda t: 1.0,
        label="gaussian",
        recipe={"kind": "gaussian"},
    )


def make_uniform() -> DisorderSpec:
    """h uniform on [-sqrt(3), sqrt(3)] via f(x) = sqrt(3)(2 Phi(x) - 1)."""
    root3 = math.sqrt(3.0)

    def f(x):
        return root3 * (2.0 * std_normal_cdf(x) - 1.0)

    def fprime(x):
        return 2.0 * root3 * std_normal_pdf(x)

    moments = _standardized_moments(f)
    return DisorderSpec(
        kind="uniform", params={}, f=f, fprime=fprime, moments=moments,
        fprime2=_expect(lambda x: fprime(x) ** 2),
        fprime3=_expect(lambda x: abs(fprime(x)) ** 3),
        w_closed=lambda t: (6.0 / math.pi) * math.asin(t / 2.0),
        wprime_closed=lambda t: 3.0 / (math.pi * math.sqrt(1.0 - 0.25 * t * t)),
        label="uniform",
        recipe={"kind": "uniform"},
    )


def make_two_point(p: float) -> DisorderSpec:
    """Two-point disorder: h = a with prob p, b with prob 1-p, standardized.

    a = -sqrt((1-p)/p) < 0 < b = sqrt(p/(1-p)); the transform is the step
    f(x) = a for x <= Phi^{-1}(p), b otherwise.
    """
    if not (0.0 < p < 1.0):
        raise ValueError(f"p must lie in (0, 1), got {p}")
    a = -math.sqrt((1.0 - p) / p)
    b = math.sqrt(p / (1.0 - p))
    gamma = std_normal_quantile(p)

    def f(x):
        return np.where(np.asarray(x, dtype=float) <= gamma, a, b)

    abs3 = abs(a) ** 3 * p + b ** 3 * (1.0 - p)
    spread2 = (a - b) ** 2

    def w_closed(t):
        return 1.0 - spread2 * split_probability(p, t)

    def wprime_closed(t):
        # d/dt of the orthant probability at equal thresholds (gamma, gamma)
        # is minus the bivariate normal density there.
        return spread2 * math.exp(-gamma * gamma / (1.0 + t)) / \
            (2.0 * math.pi * math.sqrt(1.0 - t * t))

    return DisorderSpec(
        kind="two_point", params={"p": p, "a": a, "b": b},
        f=f, fprime=None,
        moments=Moments(a * p + b * (1.0 - p), a * a * p + b * b * (1.0 - p), abs3),
        w_closed=w_closed, wprime_closed=wprime_closed,
        breakpoints=(gamma,), label=f"two_point(p={p:g})",
        recipe={"kind": "two_point", "p": p},
    )


def make_rademacher() -> DisorderSpec:
    return make_two_point(0.5)


def make_polynomial(coeffs) -> DisorderSpec:
    """Standardized polynomial transform h = (P(g) - E P(g)) / sd(P(g))."""
    poly = np.polynomial.Polynomial(list(coeffs))
    dpoly = poly.deriv()
    f, _, s = _standardize(lambda x: poly(x))
    fprime = lambda x: dpoly(x) / s
    return DisorderSpec(
        kind="polynomial", params={"coeffs": tuple(float(c) for c in coeffs)},
        f=f, fprime=fprime, moments=_standardized_moments(f),
        fprime2=_expect(lambda x: fprime(x) ** 2),
        fprime3=_expect(lambda x: abs(fprime(x)) ** 3),
        label="polynomial",
    )


def make_lipschitz(f_raw: Callable, fprime_raw: Callable | None = None,
                   label: str = "lipschitz") -> DisorderSpec:
    """Standardize an arbitrary (Lipschitz or similarly tame) callable transform."""
    f, _, s = _standardize(f_raw)
    fprime = (lambda x: fprime_raw(x) / s) if fprime_raw is not None else None
    return DisorderSpec(
        kind="lipschitz", params={},
        f=f, fprime=fprime, moments=_standardized_moments(f),
        fprime2=_expect(lambda x: fprime(x) ** 2) if fprime else None,
        fprime3=_expect(lambda x: abs(fprime(x)) ** 3) if fprime else None,
        label=label,
    )


def _extend_recipe(base: DisorderSpec, key: str, value) -> dict | None:
    """Pipeline lineage, only while it stays expressible in the config grammar."""
    if base.recipe is None or key in base.recipe or "mollify_k" in base.recipe:
        return None
    return {**base.recipe, key: value}


def truncate(base: DisorderSpec, n: float) -> DisorderSpec:
    """Clip the transform to [-n, n] and re-standardize.

    Raises DegenerateDisorderError when the clipped transform has vanishing
    variance.  Clipping a two-point step yields the same standardized step
    back, so that case is routed through the exact closed forms.
    """
    if n <= 0:
        raise ValueError(f"truncation level must be positive, got {n}")
    recipe = _extend_recipe(base, "truncate_n", float(n))
    if base.kind == "two_point":
        # clip keeps a < 0 < b, and the standardized two-point law with
        # P(low) = p is unique, so the pipeline is exact here.
        out = make_two_point(base.params["p"])
        return dataclasses.replace(
            out, kind="truncated",
            params={**out.params, "base": base.label, "n": float(n)},
            label=f"truncated({base.label}, n={n:g})", recipe=recipe)

    base_f = base.f
    raw = lambda x: np.clip(base_f(x), -n, n)
    f, _, s = _standardize(raw, base.breakpoints)
    if base.fprime is not None:
        base_fp = base.fprime

        def fprime(x):
            inside = np.abs(base_f(x)) < n
            return np.where(inside, base_fp(x), 0.0) / s
    else:
        fprime = None
    return DisorderSpec(
        kind="truncated", params={"base": base.label, "n": float(n)},
        f=f, fprime=fprime, moments=_standardized_moments(f, base.breakpoints),
        fprime2=_expect(lambda x: fprime(x) ** 2, base.breakpoints) if fprime else None,
        fprime3=_expect(lambda x: abs(fprime(x)) ** 3, base.breakpoints) if fprime else None,
        breakpoints=base.breakpoints,
        label=f"truncated({base.label}, n={n:g})",
        recipe=recipe,
    )


_MOLLIFY_ORDER = 64


def mollify(base: DisorderSpec, k: int) -> DisorderSpec:
    """Smooth the transform by f_k(x) = E f(x + g / sqrt(k)), re-standardized.

    Preserves monotonicity, always yields a smooth transform with a pointwise
    derivative, and converges back to the base transform as k grows.  The
    base should be bounded (truncate first if it is not); for step bases the
    Gaussian average is evaluated in closed form via Phi rather than by
    quadrature in the smoothing variable, which a jump integrand would defeat.
    """
    if k < 1:
        raise ValueError(f"mollification parameter must be >= 1, got {k}")
    rk = math.sqrt(float(k))

    if base.kind in ("two_point",) or (base.kind == "truncated" and base.is_step):
        p, a, b = (base.params.get(key) for key in ("p", "a", "b"))
        if a is None:
            # truncated two-point re-standardizes back to the canonical step
            canon = make_two_point(p if p is not None else 0.5)
            p, a, b = (canon.params[key] for key in ("p", "a", "b"))
        gamma = std_normal_quantile(p)
        raw = lambda x: a + (b - a) * std_normal_cdf(rk * (np.asarray(x, dtype=float) - gamma))
        raw_prime = lambda x: (b - a) * rk * std_normal_pdf(rk * (np.asarray(x, dtype=float) - gamma))
    else:
        moll_rule = gauss_hermite_rule(_MOLLIFY_ORDER)
        z, wts = moll_rule.nodes, moll_rule.weights
        base_f = base.f

        def raw(x):
            xs = np.atleast_1d(np.asarray(x, dtype=float))
            vals = base_f(xs[..., None] + z / rk) @ wts
            return vals if np.ndim(x) else float(vals[0])

        def raw_prime(x):
            # d/dx E f(x + z/sqrt(k)) = sqrt(k) E[z f(x + z/sqrt(k))] (Stein)
            xs = np.atleast_1d(np.asarray(x, dtype=float))
            vals = rk * (base_f(xs[..., None] + z / rk) @ (wts * z))
            return vals if np.ndim(x) else float(vals[0])

    f, _, s = _standardize(raw)
    fprime = lambda x: raw_prime(x) / s
    return DisorderSpec(
        kind="mollified", params={"base": base.label, "k": int(k)},
        f=f, fprime=fprime, moments=_standardized_moments(f),
        fprime2=_expect(lambda x: fprime(x) ** 2),
        fprime3=_expect(lambda x: abs(fprime(x)) ** 3),
        label=f"mollified({base.label}, k={k})",
        recipe=_extend_recipe(base, "mollify_k", int(k)),
    )


def smooth_pipeline(base: DisorderSpec, n: float = DEFAULT_TRUNCATION,
                    k: int = DEFAULT_MOLLIFICATION) -> DisorderSpec:
    """Clip-then-mollify: a bounded, smooth, standardized stand-in for base.

    At the defaults the cube-norm gap E|f_pipeline(g) - f_base(g)|^3 is below
    1e-6 for the smooth built-in families; step transforms converge only like
    k^(-1/2) and keep an O(1e-2) gap at k = 16 (raise k as needed).
    """
    return mollify(truncate(base, n), k)


def split_probability(p: float, t: float) -> float:
    """P(G1 <= Phi^{-1}(p) < G2) for t-correlated standard Gaussians.

    Integrates the conditional-CDF product over the shared Gaussian:
    E[ q(G)(1 - q(G)) ] with q(x) = Phi((gamma - sqrt(t) x) / sqrt(1-t)).
    Equals p(1-p) at t = 0 and 0 at t = 1.
    """
    if not (0.0 < p < 1.0):
        raise ValueError(f"p must lie in (0, 1), got {p}")
    if not (0.0 <= t <= 1.0):
        raise ValueError(f"t must lie in [0, 1], got {t}")
    if t >= 1.0:
        return 0.0
    gamma = std_normal_quantile(p)
    if t == 0.0:
        return p * (1.0 - p)
    rt, r1 = math.sqrt(t), math.sqrt(1.0 - t)

    def integrand(x):
        q = float(std_normal_cdf((gamma - rt * x) / r1))
        return q * (1.0 - q) * float(std_normal_pdf(x))

    hi = _TAIL_CUT + abs(gamma)
    val, _ = quad(integrand, -hi, hi, points=[gamma / rt],
                  limit=400, epsabs=1e-13, epsrel=1e-13)
    return val


def coupling_covariance(spec: DisorderSpec, t: float,
                        rule: QuadratureRule | None = None) -> float:
    """w(t) = E f(G1) f(G2) over the t-correlated pair."""
    if not (0.0 <= t <= 1.0):
        raise ValueError(f"t must lie in [0, 1], got {t}")
    if spec.w_closed is not None:
        return float(spec.w_closed(t))
    if t > 1.0 - 1e-12:
        # the rank-1 decomposition loses precision at t -> 1; w(1) = E f^2
        return _expect(lambda x: spec.f(x) ** 2, spec.breakpoints)
    return expect_bivariate(spec.f, spec.f, BivariateGaussianParams(t), rule)


_FD_STEP = 1e-5


def coupling_covariance_prime(spec: DisorderSpec, t: float,
                              rule: QuadratureRule | None = None,
                              use_closed_form: bool = True,
                              fd_fallback: bool = True) -> float:
    """w'(t) = E f'(G1) f'(G2), or the closed/finite-difference equivalent.

    Routing: closed form when installed (two-point steps differentiate the
    orthant closed form), else the derivative-pair quadrature, else central
    differences of w with step 1e-5.  With every route disabled or missing a
    DerivativeUnavailableError is raised.
    """
    if not (0.0 <= t < 1.0):
        raise ValueError(f"t must lie in [0, 1), got {t}")
    if use_closed_form and spec.wprime_closed is not None:
        return float(spec.wprime_closed(t))
    if spec.fprime is not None:
        return expect_bivariate(spec.fprime, spec.fprime, BivariateGaussianParams(t), rule)
    if fd_fallback:
        h = min(_FD_STEP, (1.0 - t) / 2, max(t / 2, _FD_STEP / 2))
        lo, hi = max(t - h, 0.0), min(t + h, 1.0)
        return (coupling_covariance(spec, hi, rule) -
                coupling_covariance(spec, lo, rule)) / (hi - lo)
    raise DerivativeUnavailableError(
        f"{spec.label or spec.kind} has no derivative route for w'(t)")


def covariance_profile(spec: DisorderSpec, t_grid,
                       rule: QuadratureRule | None = None) -> CovarianceProfile:
    t_grid = np.asarray(sorted(t_grid), dtype=float)
    w = np.array([coupling_covariance(spec, t, rule) for t in t_grid])
    wp = np.array([coupling_covariance_prime(spec, min(t, 1.0 - 1e-9), rule)
                   for t in t_grid])
    return CovarianceProfile(t_grid=t_grid, w_values=w, wprime_values=wp)


def _mask64(seed: int) -> int:
    return int(seed) & 0xFFFFFFFFFFFFFFFF


def stream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator keyed by (seed, *key); stable under any threading."""
    return np.random.default_rng([_mask64(seed), *[_mask64(k) for k in key]])


def sample_couplings(spec: DisorderSpec, n: int, seed: int) -> DisorderMatrix:
    """Draw the n x n Gaussian seed matrix and its transformed couplings."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    g = stream(seed).standard_normal((n, n))
    return DisorderMatrix(spec=spec, n=n, seed=seed,
                          gaussians=g, couplings=np.asarray(spec.f(g), dtype=float))


_BUILDERS = {
    "gaussian": make_gaussian,
    "uniform": make_uniform,
    "two_point": make_two_point,
    "rademacher": make_rademacher,
}


def spec_from_fragment(text: str) -> DisorderSpec:
    """Parse fragments like 'kind=uniform' or 'kind=two_point, p=0.2, mollify_k=4'.

    Inverse of DisorderSpec.config_fragment for every grammar-expressible
    spec; unknown keys or kinds are rejected.
    """
    kv = {}
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        key, sep, value = part.partition("=")
        if not sep:
            raise ValueError(f"fragment item '{part}' is not key=value")
        kv[key.strip()] = value.strip()
    if "kind" not in kv:
        raise ValueError("fragment must carry kind=")
    extra = set(kv) - {"kind", "p", "truncate_n", "mollify_k"}
    if extra:
        raise ValueError(f"unknown fragment keys {sorted(extra)}")
    return build_spec(
        kv["kind"],
        p=float(kv["p"]) if "p" in kv else None,
        truncate_n=float(kv["truncate_n"]) if "truncate_n" in kv else None,
        mollify_k=int(kv["mollify_k"]) if "mollify_k" in kv else None,
    )


def build_spec(kind: str, p: float | None = None,
               truncate_n: float | None = None,
               mollify_k: int | None = None) -> DisorderSpec:
    """Construct a disorder from plain config values (see the cli grammar)."""
    if kind not in _BUILDERS:
        raise ValueError(f"unknown disorder kind '{kind}' "
                         f"(expected one of {sorted(_BUILDERS)})")
    if kind == "two_point":
        if p is None:
            raise ValueError("two_point disorder requires p")
        spec = make_two_point(p)
    else:
        if p is not None:
            raise ValueError(f"p is only valid for two_point, not {kind}")
        spec = _BUILDERS[kind]()
    if truncate_n is not None:
        spec = truncate(spec, truncate_n)
    if mollify_k is not None:
        spec = mollify(spec, mollify_k)
    return spec
