"""Built-in invariant suite behind `sklab verify`.

Each check is a small closed-form or dual-route consistency test that a
correct build passes deterministically in seconds.  The statistical
acceptance studies live in the test suite, not here.
"""

from __future__ import annotations

import math
import sys
from typing import Callable

import numpy as np

from . import bounds, disorder, gaussian, interp, sk
from ._stats import estimate_variance_jackknife

# regression suite of smooth, moderate-growth functions for the
# absolute-value derivative inequality
PSI_SUITE: list[tuple[str, Callable, Callable]] = [
    ("identity", lambda x: x, lambda x: 1.0 + 0.0 * x),
    ("constant", lambda x: 1.0 + 0.0 * x, lambda x: 0.0 * x),
    ("tanh", np.tanh, lambda x: 1.0 / np.cosh(x) ** 2),
    ("sin", np.sin, np.cos),
    ("square", lambda x: x ** 2, lambda x: 2.0 * x),
    ("square_shifted", lambda x: x ** 2 - 1.0, lambda x: 2.0 * x),
    ("cubic_odd", lambda x: x ** 3 - x, lambda x: 3.0 * x ** 2 - 1.0),
    ("quartic", lambda x: 1.0 + x + 0.25 * x ** 4, lambda x: 1.0 + x ** 3),
    ("gauss_bump", lambda x: np.exp(-0.5 * x ** 2), lambda x: -x * np.exp(-0.5 * x ** 2)),
    ("gauss_shifted", lambda x: 2.0 * np.exp(-0.25 * (x - 1.0) ** 2),
     lambda x: -(x - 1.0) * np.exp(-0.25 * (x - 1.0) ** 2)),
]


def _double_factorial(d: int) -> float:
    out = 1.0
    while d > 1:
        out *= d
        d -= 2
    return out


def check_quadrature_exactness(fast: bool) -> None:
    orders = (1, 2, 5, 16, 60) if fast else tuple(range(1, 61))
    for order in orders:
        rule = gaussian.gauss_hermite_rule(order)
        assert abs(rule.weights.sum() - 1.0) < 1e-12
        for d in range(0, 2 * order):
            moment = 0.0 if d % 2 else _double_factorial(d - 1)
            est = float(np.dot(rule.weights, rule.nodes ** d))
            # cancellation residue of odd moments scales with the even
            # neighbor's magnitude, hence (d-1)!! in the tolerance either way
            tol = 1e-9 * (1.0 + _double_factorial(d - 1))
            assert abs(est - moment) <= tol, f"order {order} degree {d}: {est} vs {moment}"


def check_normal_cdf_quantile(fast: bool) -> None:
    assert gaussian.std_normal_cdf(0.0) == 0.5
    assert gaussian.std_normal_cdf(8.0) > 1.0 - 1e-14
    x = 1.2345
    assert abs(gaussian.std_normal_cdf(-x) - (1.0 - gaussian.std_normal_cdf(x))) < 1e-15
    for p in (1e-9, 0.025, 0.5, 0.785, 0.975, 1.0 - 1e-9):
        q = gaussian.std_normal_quantile(p)
        assert abs(gaussian.std_normal_cdf(q) - p) < 1e-12
    assert abs(gaussian.std_normal_quantile(gaussian.std_normal_cdf(1.7)) - 1.7) < 1e-10


def check_covariance_closed_forms(fast: bool) -> None:
    grid = [0.0, 0.3, 0.9, 0.99] if fast else [i / 10 for i in range(10)] + [0.99]
    g = disorder.make_gaussian()
    u = disorder.make_uniform()
    rad = disorder.make_rademacher()
    rule = gaussian.default_rule()
    for t in grid:
        assert abs(disorder.coupling_covariance(g, t) - t) < 1e-12
        w_u = disorder.coupling_covariance(u, t)
        quad2d = gaussian.expect_bivariate(u.f, u.f, gaussian.BivariateGaussianParams(t), rule)
        assert abs(w_u - quad2d) < 1e-8, f"uniform t={t}"
        w_r = disorder.coupling_covariance(rad, t)
        assert abs(w_r - 2.0 / math.pi * math.asin(t)) < 1e-8, f"rademacher t={t}"
    for p in (0.2, 0.5, 0.8):
        spec = disorder.make_two_point(p)
        a, b = spec.params["a"], spec.params["b"]
        for t in (0.0, 0.3, 0.7, 0.95):
            lhs = disorder.coupling_covariance(spec, t)
            rhs = 1.0 - (a - b) ** 2 * disorder.split_probability(p, t)
            assert abs(lhs - rhs) < 1e-8


def check_psi_inequality_suite(fast: bool) -> None:
    rule = gaussian.default_rule()
    for name, psi, dpsi in PSI_SUITE:
        report = gaussian.verify_abs_psi_inequality(psi, dpsi, rule)
        assert report.holds, f"psi suite '{name}': lhs={report.lhs} rhs={report.rhs}"
    eq = gaussian.verify_abs_psi_inequality(lambda x: x, lambda x: 1.0 + 0.0 * x, rule)
    assert abs(eq.lhs - eq.rhs) < 1e-9


def check_enumeration_oracle(fast: bool) -> None:
    rng = np.random.default_rng(20260101)
    trials = 4 if fast else 12
    for _ in range(trials):
        n = int(rng.integers(2, 11))
        beta = float(rng.choice([0.3, 1.0 / math.sqrt(2.0), 1.5]))
        system = sk.SpinSystem(n=n, beta=beta, couplings=rng.standard_normal((n, n)),
                               field_r=float(rng.choice([0.0, 0.5])))
        exact = sk.free_energy_exact(system).log_partition
        naive = sk.log_partition_naive(system)
        assert abs(exact - naive) < 1e-9


def check_covariance_gap_bound(fast: bool) -> None:
    for spec in (disorder.make_gaussian(), disorder.make_uniform()):
        for t in [i / 10 for i in range(10)]:
            rep = bounds.covariance_gap_bound(spec, t)
            assert rep.holds
            if spec.kind == "gaussian":
                assert abs(rep.lhs - rep.rhs) < 1e-12


def check_jackknife(fast: bool) -> None:
    flat = estimate_variance_jackknife([2.0] * 10)
    assert flat["var"] == 0.0 and flat["std_error"] == 0.0
    pm = estimate_variance_jackknife([-1.0, 1.0] * 50)
    assert abs(pm["var"] - 100.0 / 99.0) < 1e-10


def check_exponent_identity(fast: bool) -> None:
    for c in (0.5, 1.0, 2.0):
        for n in (3, 10, 100, 10 ** 6):
            lhs = 1.0 - bounds.interpolation_radius(n, c)
            rhs = c * math.log(math.log(n)) / math.log(n)
            assert lhs <= rhs + 1e-12, f"c={c} N={n}"


def check_overlap_popcount(fast: bool) -> None:
    rng = np.random.default_rng(7)
    for _ in range(20):
        n = int(rng.integers(1, 30))
        sa = np.where(rng.random(n) < 0.5, -1.0, 1.0)
        sb = np.where(rng.random(n) < 0.5, -1.0, 1.0)
        direct = float(np.dot(sa, sb) / n)
        via_bits = sk.overlap(sk.SpinConfig.from_spins(sa), sk.SpinConfig.from_spins(sb))
        assert abs(direct - via_bits) < 1e-15


def check_variance_identity_fast(fast: bool) -> None:
    spec = disorder.make_gaussian()
    reps = 300 if fast else 1200
    tri = np.array([interp.replica_variance_identity(spec, 5, 1.0, 99, r)
                    for r in range(reps)])
    gap = tri[:, 0] ** 2 - tri[:, 1] * tri[:, 2]
    jk = estimate_variance_jackknife(tri[:, 0])
    se_gap = gap.std(ddof=1) / math.sqrt(reps)
    sigma = math.hypot(se_gap, jk["std_error"])
    dev = abs(gap.mean() - jk["var"]) / sigma
    assert dev < 4.0, f"endpoint gap vs direct variance deviates {dev:.2f} sigma"


CHECKS = [
    ("quadrature_exactness", check_quadrature_exactness),
    ("normal_cdf_quantile", check_normal_cdf_quantile),
    ("covariance_closed_forms", check_covariance_closed_forms),
    ("psi_inequality_suite", check_psi_inequality_suite),
    ("enumeration_oracle", check_enumeration_oracle),
    ("covariance_gap_bound", check_covariance_gap_bound),
    ("jackknife", check_jackknife),
    ("exponent_identity", check_exponent_identity),
    ("overlap_popcount", check_overlap_popcount),
    ("variance_identity", check_variance_identity_fast),
]


def run_selfcheck(fast: bool = False, out=sys.stdout) -> int:
    failures = 0
    for name, check in CHECKS:
        try:
            check(fast)
        except Exception as exc:  # noqa: BLE001 - report and count every failure
            failures += 1
            print(f"FAIL {name}: {exc}", file=out)
        else:
            print(f"ok   {name}", file=out)
    if failures:
        print(f"{failures} of {len(CHECKS)} checks failed", file=out)
    else:
        print(f"all {len(CHECKS)} checks passed", file=out)
    return failures
