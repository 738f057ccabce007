"""Correlated-disorder interpolation and its Monte Carlo estimators.

Two copies of the coupling array share a Gaussian seed g and mix in
independent seeds g1, g2:

    g_t^l = sqrt(t) g + sqrt(1-t) g^l,   l = 1, 2,

so the systems built from f(g_t^1), f(g_t^2) are independent at t = 0 and
identical at t = 1.  The central object is the free-energy product moment

    product(t) = E [ F(f(g_t^1)) F(f(g_t^2)) ],

whose endpoint gap product(1) - product(0) equals Var(F_N).  Its t-derivative
reduces, for differentiable transforms, to an exactly computable double sum
over Gibbs pair expectations of the two systems, because the coupled Gibbs
measure is a product measure:

    slope(t) = (beta^2/N) sum_ij E f'(g_t,ij^1) f'(g_t,ij^2)
                               <s_i s_j>_A <s_i s_j>_B.

All estimators are Monte Carlo over disorder replicas; replica r of a run
seeded s draws its three Gaussian arrays from independent streams keyed
(s, r, 0..2), so grids evaluated with the same seed share randomness
(common random numbers) and their differences have tiny variance.

Everything here is a pure function of (spec, sizes, seed, replica); the
experiment harness owns parallel scheduling over replicas.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .disorder import DisorderSpec, coupling_covariance, stream
from .errors import DerivativeUnavailableError, SizeLimitError
from .sk import N_MAX_EXACT, SpinSystem, all_config_spins, config_energies, free_energy_exact

N_MAX_PAIR = 10
DEFAULT_REPLICAS = 2000

# slope estimates at the endpoints are evaluated at clamped t
_ENDPOINT_CLAMP = 1e-6


@dataclass(frozen=True)
class InterpState:
    """Three independent N x N Gaussian arrays realizing the mixed pair."""

    spec: DisorderSpec
    n: int
    seed: int
    g_shared: np.ndarray
    g_one: np.ndarray
    g_two: np.ndarray


@dataclass(frozen=True)
class CoupledSystem:
    t: float
    sys_a: SpinSystem
    sys_b: SpinSystem


@dataclass(frozen=True)
class McEstimate:
    t: float
    value: float
    std_error: float
    replicas: int


@dataclass(frozen=True)
class HolderReport:
    s: float
    t: float
    lhs: float
    rhs: float
    std_error: float
    holds_within_ci: bool


@dataclass(frozen=True)
class MonotonicityReport:
    t_grid: np.ndarray
    first_differences: np.ndarray
    first_std_errors: np.ndarray
    second_differences: np.ndarray
    second_std_errors: np.ndarray
    all_nonneg_within_ci: bool


def draw_interp_state(spec: DisorderSpec, n: int, seed: int, rep: int = 0) -> InterpState:
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    shape = (n, n)
    return InterpState(
        spec=spec, n=n, seed=seed,
        g_shared=stream(seed, rep, 0).standard_normal(shape),
        g_one=stream(seed, rep, 1).standard_normal(shape),
        g_two=stream(seed, rep, 2).standard_normal(shape),
    )


def mixed_gaussians(state: InterpState, t: float) -> tuple[np.ndarray, np.ndarray]:
    if not (0.0 <= t <= 1.0):
        raise ValueError(f"t must lie in [0, 1], got {t}")
    a, b = math.sqrt(t), math.sqrt(1.0 - t)
    return a * state.g_shared + b * state.g_one, a * state.g_shared + b * state.g_two


def realize_coupled(state: InterpState, t: float, beta: float,
                    field_r: float = 0.0) -> CoupledSystem:
    """Build the pair of systems with couplings f(g_t^1), f(g_t^2)."""
    gt1, gt2 = mixed_gaussians(state, t)
    f = state.spec.f
    return CoupledSystem(
        t=t,
        sys_a=SpinSystem(n=state.n, beta=beta, couplings=np.asarray(f(gt1), dtype=float),
                         field_r=field_r),
        sys_b=SpinSystem(n=state.n, beta=beta, couplings=np.asarray(f(gt2), dtype=float),
                         field_r=field_r),
    )


def _check_exact(n: int) -> None:
    if n > N_MAX_EXACT:
        raise SizeLimitError(f"estimator needs exact enumeration (N <= {N_MAX_EXACT}), got {n}")


def _estimate(values: np.ndarray, t: float) -> McEstimate:
    values = np.asarray(values, dtype=float)
    r = len(values)
    se = float(values.std(ddof=1) / math.sqrt(r)) if r > 1 else 0.0
    return McEstimate(t=t, value=float(values.mean()), std_error=se, replicas=r)


# ---------------------------------------------------------------------------
# per-replica primitives (deterministic in (seed, rep); harness-parallelizable)

def replica_product_values(spec: DisorderSpec, n: int, beta: float, t_grid,
                           seed: int, rep: int, field_r: float = 0.0) -> np.ndarray:
    """F_A * F_B at every grid t, all from replica rep's arrays (CRN in t)."""
    _check_exact(n)
    state = draw_interp_state(spec, n, seed, rep)
    out = np.empty(len(t_grid))
    for i, t in enumerate(t_grid):
        pair = realize_coupled(state, t, beta, field_r)
        fa = free_energy_exact(pair.sys_a).log_partition
        fb = fa if t == 1.0 else free_energy_exact(pair.sys_b).log_partition
        out[i] = fa * fb
    return out


def replica_free_energy(spec: DisorderSpec, n: int, beta: float,
                        seed: int, rep: int, field_r: float = 0.0) -> float:
    """F of one disorder draw; replica rep uses the stream the t = 1 mix shares."""
    _check_exact(n)
    g = stream(seed, rep, 0).standard_normal((n, n))
    system = SpinSystem(n=n, beta=beta, couplings=np.asarray(spec.f(g), dtype=float),
                        field_r=field_r)
    return free_energy_exact(system).log_partition


def replica_variance_identity(spec: DisorderSpec, n: int, beta: float,
                              seed: int, rep: int,
                              field_r: float = 0.0) -> tuple[float, float, float]:
    """(F at t=1 shared couplings, F_A at t=0, F_B at t=0) for one replica."""
    _check_exact(n)
    state = draw_interp_state(spec, n, seed, rep)
    f = state.spec.f
    mk = lambda g: SpinSystem(n=n, beta=beta, couplings=np.asarray(f(g), dtype=float),
                              field_r=field_r)
    return (free_energy_exact(mk(state.g_shared)).log_partition,
            free_energy_exact(mk(state.g_one)).log_partition,
            free_energy_exact(mk(state.g_two)).log_partition)


def _clamp_t(t: float) -> float:
    return min(max(t, _ENDPOINT_CLAMP), 1.0 - _ENDPOINT_CLAMP)


def replica_slope_value(spec: DisorderSpec, n: int, beta: float, t: float,
                        seed: int, rep: int, field_r: float = 0.0) -> float:
    """One replica's exact slope term (needs a pointwise derivative f')."""
    if spec.fprime is None:
        raise DerivativeUnavailableError(
            f"{spec.label or spec.kind} has no pointwise derivative; "
            "slope estimation applies to smooth transforms only")
    _check_exact(n)
    t = _clamp_t(t)
    state = draw_interp_state(spec, n, seed, rep)
    gt1, gt2 = mixed_gaussians(state, t)
    pair = realize_coupled(state, t, beta, field_r)
    pa = free_energy_exact(pair.sys_a, want_pairs=True).pair_expectations
    pb = free_energy_exact(pair.sys_b, want_pairs=True).pair_expectations
    deriv = np.asarray(spec.fprime(gt1), dtype=float) * np.asarray(spec.fprime(gt2), dtype=float)
    return float(beta * beta / n * np.sum(deriv * pa * pb))


def replica_overlap_moment(spec: DisorderSpec, n: int, beta: float, t: float,
                           seed: int, rep: int, field_r: float = 0.0) -> float:
    """One replica's <R(sigma,tau)^2> under the product of the two Gibbs measures."""
    _check_exact(n)
    state = draw_interp_state(spec, n, seed, rep)
    pair = realize_coupled(state, t, beta, field_r)
    pa = free_energy_exact(pair.sys_a, want_pairs=True).pair_expectations
    pb = free_energy_exact(pair.sys_b, want_pairs=True).pair_expectations
    return float(np.mean(pa * pb))


_pair_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _pair_tables(n: int) -> tuple[np.ndarray, np.ndarray]:
    """(spin matrix over configs, R^2 table over config pairs), cached per N."""
    if n not in _pair_cache:
        s = all_config_spins(n)
        r2 = ((s @ s.T) / n) ** 2
        _pair_cache[n] = (s, r2)
    return _pair_cache[n]


def _logsumexp(m: np.ndarray) -> float:
    mx = float(m.max())
    return mx + math.log(np.exp(m - mx).sum())


def replica_coupled_fe(spec: DisorderSpec, n: int, beta: float, t: float,
                       tilts, seed: int, rep: int,
                       field_r: float = 0.0) -> np.ndarray:
    """Exact two-replica free energy with an R^2 tilt, per tilt value.

    Enumerates all 4^N configuration pairs:
        log sum_{sigma,tau} exp(e_A(sigma) + e_B(tau) + tilt beta^2 N R^2).
    """
    if n > N_MAX_PAIR:
        raise SizeLimitError(f"pair enumeration capped at N = {N_MAX_PAIR}, got {n}")
    state = draw_interp_state(spec, n, seed, rep)
    pair = realize_coupled(state, t, beta, field_r)
    ea = config_energies(pair.sys_a)
    eb = config_energies(pair.sys_b)
    _, r2 = _pair_tables(n)
    base = ea[:, None] + eb[None, :]
    return np.array([_logsumexp(base + lam * beta * beta * n * r2) for lam in tilts])


# ---------------------------------------------------------------------------
# replica-averaged estimators

def free_energy_product(spec: DisorderSpec, n: int, beta: float, t: float,
                        replicas: int = DEFAULT_REPLICAS, seed: int = 0,
                        field_r: float = 0.0) -> McEstimate:
    """Monte Carlo estimate of E[F(f(g_t^1)) F(f(g_t^2))]."""
    if replicas < 2:
        raise ValueError(f"replicas must be >= 2, got {replicas}")
    vals = np.array([replica_product_values(spec, n, beta, [t], seed, r, field_r)[0]
                     for r in range(replicas)])
    return _estimate(vals, t)


def product_samples(spec: DisorderSpec, n: int, beta: float, t_grid,
                    replicas: int = DEFAULT_REPLICAS, seed: int = 0,
                    field_r: float = 0.0) -> np.ndarray:
    """(replicas, len(t_grid)) matrix of F_A F_B samples with CRN across t."""
    if replicas < 2:
        raise ValueError(f"replicas must be >= 2, got {replicas}")
    return np.vstack([replica_product_values(spec, n, beta, t_grid, seed, r, field_r)
                      for r in range(replicas)])


def free_energy_product_slope(spec: DisorderSpec, n: int, beta: float, t: float,
                              replicas: int = DEFAULT_REPLICAS, seed: int = 0,
                              field_r: float = 0.0) -> McEstimate:
    """Monte Carlo estimate of d/dt E[F(f(g_t^1)) F(f(g_t^2))] (smooth transforms)."""
    if replicas < 2:
        raise ValueError(f"replicas must be >= 2, got {replicas}")
    vals = np.array([replica_slope_value(spec, n, beta, t, seed, r, field_r)
                     for r in range(replicas)])
    return _estimate(vals, _clamp_t(t))


def coupled_overlap_moment(spec: DisorderSpec, n: int, beta: float, t: float,
                           replicas: int = DEFAULT_REPLICAS, seed: int = 0,
                           field_r: float = 0.0) -> McEstimate:
    """Monte Carlo estimate of E<R(sigma,tau)^2> under the coupled measure."""
    if replicas < 2:
        raise ValueError(f"replicas must be >= 2, got {replicas}")
    vals = np.array([replica_overlap_moment(spec, n, beta, t, seed, r, field_r)
                     for r in range(replicas)])
    return _estimate(vals, t)


def coupled_free_energy(spec: DisorderSpec, n: int, beta: float, t: float,
                        tilt: float, replicas: int = DEFAULT_REPLICAS,
                        seed: int = 0, field_r: float = 0.0) -> McEstimate:
    """Monte Carlo estimate of the tilted two-replica free energy (tilt >= 0)."""
    if tilt < 0:
        raise ValueError(f"tilt must be >= 0, got {tilt}")
    if replicas < 2:
        raise ValueError(f"replicas must be >= 2, got {replicas}")
    vals = np.array([replica_coupled_fe(spec, n, beta, t, [tilt], seed, r, field_r)[0]
                     for r in range(replicas)])
    return _estimate(vals, t)


def verify_slope_holder(spec: DisorderSpec, n: int, beta: float, s: float, t: float,
                        replicas: int = DEFAULT_REPLICAS, seed: int = 0) -> HolderReport:
    """Check slope(t) <= slope(s)^alpha slope(1)^(1-alpha), alpha = log t / log s.

    All three estimates share replicas (CRN); the comparison holds when
    lhs <= rhs + 3 sigma with sigma propagated through the power combination
    by the delta method on the sample covariance of the three means.
    """
    if not (0.0 < s < t < 1.0):
        raise ValueError(f"need 0 < s < t < 1, got s={s}, t={t}")
    samples = np.empty((replicas, 3))
    t_one = 1.0 - _ENDPOINT_CLAMP
    for r in range(replicas):
        samples[r, 0] = replica_slope_value(spec, n, beta, s, seed, r)
        samples[r, 1] = replica_slope_value(spec, n, beta, t, seed, r)
        samples[r, 2] = replica_slope_value(spec, n, beta, t_one, seed, r)
    a, lhs, b = samples.mean(axis=0)
    alpha = math.log(t) / math.log(s)
    rhs = a ** alpha * b ** (1.0 - alpha)
    cov = np.cov(samples, rowvar=False) / replicas
    # gradient of rhs - lhs in (a, lhs, b)
    grad = np.array([alpha * rhs / a, -1.0, (1.0 - alpha) * rhs / b])
    sigma = math.sqrt(max(float(grad @ cov @ grad), 0.0))
    return HolderReport(s=s, t=t, lhs=float(lhs), rhs=float(rhs), std_error=sigma,
                        holds_within_ci=lhs <= rhs + 3.0 * sigma)


def verify_complete_monotonicity(spec: DisorderSpec, n: int, beta: float, t_grid,
                                 replicas: int = DEFAULT_REPLICAS,
                                 seed: int = 0) -> MonotonicityReport:
    """First and second grid differences of the product moment, with CRN.

    The product moment has nonnegative derivatives of every order; a
    difference is flagged when its replica mean falls below -3 standard
    errors.
    """
    t_grid = np.asarray(sorted(t_grid), dtype=float)
    if len(t_grid) < 4:
        raise ValueError("need at least 4 grid points")
    if not (t_grid[0] > 0.0 and t_grid[-1] < 1.0):
        raise ValueError("grid must lie strictly inside (0, 1)")
    samples = product_samples(spec, n, beta, t_grid, replicas, seed)
    d1 = np.diff(samples, axis=1)
    d2 = np.diff(samples, n=2, axis=1)
    se = lambda m: m.std(axis=0, ddof=1) / math.sqrt(replicas)
    d1_mean, d1_se = d1.mean(axis=0), se(d1)
    d2_mean, d2_se = d2.mean(axis=0), se(d2)
    ok = bool(np.all(d1_mean >= -3.0 * d1_se) and np.all(d2_mean >= -3.0 * d2_se))
    return MonotonicityReport(
        t_grid=t_grid,
        first_differences=d1_mean, first_std_errors=d1_se,
        second_differences=d2_mean, second_std_errors=d2_se,
        all_nonneg_within_ci=ok,
    )


def chained_tilt_inequality(spec: DisorderSpec, n: int, beta: float, t: float,
                            replicas: int = DEFAULT_REPLICAS, seed: int = 0):
    """Per-replica margin of the convexity chain at tilt0 = 1/(4 beta^2):

        tilt0 beta^2 N <R^2>_t <= FE(0, tilt0 + w(t)) - FE(0, 0) + sqrt(N) D(t),

    with D(t) = 16 beta^3 (2^(1/3) E|h|^3 + 1) / (1 - t).  Returns
    (lhs McEstimate, rhs McEstimate, margin McEstimate) where margin = rhs - lhs
    per replica; the inequality is accepted when margin >= -3 sigma.
    """
    from .bounds import slope_remainder_coeff  # local import avoids a cycle

    tilt0 = 1.0 / (4.0 * beta * beta)
    wt = coupling_covariance(spec, t)
    d_t = 16.0 * beta ** 3 * slope_remainder_coeff(spec.abs3, t)
    lhs = np.empty(replicas)
    rhs = np.empty(replicas)
    for r in range(replicas):
        moment = replica_overlap_moment(spec, n, beta, t, seed, r)
        q_pair = replica_coupled_fe(spec, n, beta, 0.0, [tilt0 + wt, 0.0], seed, r)
        lhs[r] = tilt0 * beta * beta * n * moment
        rhs[r] = q_pair[0] - q_pair[1] + math.sqrt(n) * d_t
    return _estimate(lhs, t), _estimate(rhs, t), _estimate(rhs - lhs, t)
