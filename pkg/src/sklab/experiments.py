"""Reproducible Monte Carlo studies over disorder replicas.

A study is described by an ExperimentConfig and produces ResultRows that
serialize to CSV with the fixed header

    study,N,t,lambda,estimate,std_error,extra_json

Replicas are scheduled over a thread pool (THREADS env var caps the width,
default: hardware parallelism) in static index chunks; every replica owns a
generator stream keyed (seed, replica), results land in a replica-indexed
array, and reductions run in fixed index order -- so output bytes do not
depend on the worker count.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import bounds as bounds_mod
from . import interp
from ._stats import estimate_variance_jackknife
from .disorder import DisorderSpec
from .errors import ConfigError
from .interp import N_MAX_PAIR
from .sk import N_MAX_EXACT

__all__ = [
    "ExperimentConfig", "ResultRow", "estimate_variance_jackknife",
    "run_study", "run_variance_scaling", "run_product_curve",
    "run_overlap_curve", "run_tilt_convexity", "run_holder_check",
    "run_bound_ratios", "rows_to_csv", "rows_from_csv", "manifest_text",
]

CANONICAL_N_LIST = (4, 6, 8, 10, 12, 14, 16)
DEFAULT_REPLICAS = 4000
DEFAULT_SEED = 20260101

STUDIES = ("variance_scaling", "product_curve", "overlap_curve",
           "tilt_convexity", "holder_check", "bound_ratios")

_PAIR_STUDIES = ("tilt_convexity",)


@dataclass(frozen=True)
class ExperimentConfig:
    spec: DisorderSpec
    beta: float
    study: str
    field_r: float = 0.0
    n_list: tuple = CANONICAL_N_LIST
    replicas: int = DEFAULT_REPLICAS
    seed: int = DEFAULT_SEED
    t_grid: tuple | None = None
    lambda_grid: tuple | None = None
    c_const: float = 1.0
    k_const: float = 1.0

    def __post_init__(self) -> None:
        if self.study not in STUDIES:
            raise ConfigError(f"unknown study '{self.study}' (expected one of {STUDIES})")
        if self.beta <= 0:
            raise ConfigError("beta must be positive")
        if self.replicas < 3:
            raise ConfigError("replicas must be >= 3")
        cap = N_MAX_PAIR if self.study in _PAIR_STUDIES else N_MAX_EXACT
        for n in self.n_list:
            if not (1 <= n <= cap):
                raise ConfigError(f"N={n} outside [1, {cap}] for study {self.study}")
        for name, grid in (("t_grid", self.t_grid), ("lambda_grid", self.lambda_grid)):
            if grid is not None:
                if list(grid) != sorted(grid):
                    raise ConfigError(f"{name} must be sorted")
                if name == "t_grid" and any(not 0.0 <= v <= 1.0 for v in grid):
                    raise ConfigError("t_grid values must lie in [0, 1]")
                if name == "lambda_grid" and any(v < 0.0 for v in grid):
                    raise ConfigError("lambda_grid values must be >= 0")
        if self.study in ("product_curve", "overlap_curve", "holder_check") \
                and not self.t_grid:
            raise ConfigError(f"study {self.study} requires t_grid")
        if self.study == "holder_check":
            if len(self.t_grid) != 2 or not (0.0 < self.t_grid[0] < self.t_grid[1] < 1.0):
                raise ConfigError("holder_check needs t_grid = (s, t) with 0 < s < t < 1")
            if self.spec.is_step:
                raise ConfigError("holder_check needs a differentiable transform")
        if self.study == "tilt_convexity" and not self.lambda_grid:
            raise ConfigError("tilt_convexity requires lambda_grid")

    def canonical_text(self) -> str:
        lines = [
            "[disorder]", self.spec.config_fragment().replace(", ", "\n").replace("=", " = "),
            "[model]",
            f"beta = {self.beta!r}", f"field_r = {self.field_r!r}",
            "N_list = " + ",".join(str(n) for n in self.n_list),
            f"replicas = {self.replicas}", f"seed = {self.seed}",
            "[study]", f"study = {self.study}",
        ]
        if self.t_grid is not None:
            lines.append("t_grid = " + ",".join(repr(t) for t in self.t_grid))
        if self.lambda_grid is not None:
            lines.append("lambda_grid = " + ",".join(repr(v) for v in self.lambda_grid))
        lines += [f"c_const = {self.c_const!r}", f"K_const = {self.k_const!r}"]
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ResultRow:
    study: str
    n: int
    t: float | None
    lam: float | None
    estimate: float
    std_error: float
    extra: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not math.isfinite(self.estimate):
            raise ValueError("estimate must be finite")
        if self.std_error < 0:
            raise ValueError("std_error must be >= 0")


def thread_count() -> int:
    env = os.environ.get("THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def map_replicas(fn, replicas: int, threads: int | None = None) -> list:
    """fn(r) for r in range(replicas), statically chunked across threads.

    Results are ordered by replica index, so reductions downstream are
    independent of the worker count.
    """
    threads = threads if threads is not None else thread_count()
    if threads <= 1 or replicas < 2 * threads:
        return [fn(r) for r in range(replicas)]
    out = [None] * replicas
    chunks = np.array_split(np.arange(replicas), threads)

    def work(idx):
        for r in idx:
            out[r] = fn(int(r))

    with ThreadPoolExecutor(max_workers=threads) as pool:
        list(pool.map(work, chunks))
    return out


def _mean_se(values: np.ndarray) -> tuple[float, float]:
    values = np.asarray(values, dtype=float)
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(len(values)))


def run_variance_scaling(config: ExperimentConfig, threads: int | None = None) -> list[ResultRow]:
    """Var(F_N) per N with jackknife errors; extra carries Var/N and Var log N / N."""
    rows = []
    for n in config.n_list:
        vals = np.array(map_replicas(
            lambda r: interp.replica_free_energy(config.spec, n, config.beta,
                                                 config.seed, r, config.field_r),
            config.replicas, threads))
        est = estimate_variance_jackknife(vals)
        rows.append(ResultRow(
            study=config.study, n=n, t=None, lam=None,
            estimate=est["var"], std_error=est["std_error"],
            extra={"var_over_n": est["var"] / n,
                   "var_logn_over_n": est["var"] * math.log(n) / n}))
    return rows


def run_product_curve(config: ExperimentConfig, threads: int | None = None) -> list[ResultRow]:
    """Free-energy product moment over t_grid (CRN), with grid differences.

    When the grid contains both endpoints an extra summary row (t and lambda
    empty) reports the endpoint gap against the direct plug-in variance.
    """
    t_grid = list(config.t_grid)
    rows = []
    for n in config.n_list:
        samples = np.vstack(map_replicas(
            lambda r: interp.replica_product_values(config.spec, n, config.beta,
                                                    t_grid, config.seed, r,
                                                    config.field_r),
            config.replicas, threads))
        d1 = np.diff(samples, axis=1)
        d2 = np.diff(samples, n=2, axis=1)
        for i, t in enumerate(t_grid):
            extra = {}
            if i >= 1:
                m, se = _mean_se(d1[:, i - 1])
                extra.update(d1=m, d1_se=se)
            if i >= 2:
                m, se = _mean_se(d2[:, i - 2])
                extra.update(d2=m, d2_se=se)
            m, se = _mean_se(samples[:, i])
            rows.append(ResultRow(study=config.study, n=n, t=t, lam=None,
                                  estimate=m, std_error=se, extra=extra))
        if 0.0 in t_grid and 1.0 in t_grid:
            gap = samples[:, t_grid.index(1.0)] - samples[:, t_grid.index(0.0)]
            gap_m, gap_se = _mean_se(gap)
            shared = np.array(map_replicas(
                lambda r: interp.replica_free_energy(config.spec, n, config.beta,
                                                     config.seed, r, config.field_r),
                config.replicas, threads))
            direct = estimate_variance_jackknife(shared)
            sigma = math.hypot(gap_se, direct["std_error"])
            rows.append(ResultRow(
                study=config.study, n=n, t=None, lam=None,
                estimate=gap_m, std_error=gap_se,
                extra={"direct_var": direct["var"],
                       "direct_var_se": direct["std_error"],
                       "gap_vs_var_sigmas": (gap_m - direct["var"]) / sigma
                       if sigma > 0 else 0.0}))
    return rows


def run_overlap_curve(config: ExperimentConfig, threads: int | None = None) -> list[ResultRow]:
    """E<R^2>_t per (N, t) plus the admissible-region reference coefficient."""
    rows = []
    for n in config.n_list:
        for t in config.t_grid:
            vals = np.array(map_replicas(
                lambda r: interp.replica_overlap_moment(config.spec, n, config.beta,
                                                        t, config.seed, r,
                                                        config.field_r),
                config.replicas, threads))
            m, se = _mean_se(vals)
            admissible = bounds_mod.overlap_admissible(config.beta, t)
            extra = {"sqrt_n_scaled": math.sqrt(n) * m, "admissible": admissible}
            if admissible:
                coeff = bounds_mod.overlap_moment_coeff(config.spec.abs3, config.beta,
                                                        t, config.k_const)
                extra["bound_ref"] = coeff / math.sqrt(n)
            rows.append(ResultRow(study=config.study, n=n, t=t, lam=None,
                                  estimate=m, std_error=se, extra=extra))
    return rows


def run_tilt_convexity(config: ExperimentConfig, threads: int | None = None) -> list[ResultRow]:
    """Tilted two-replica free energy over (t, lambda): convexity, decoupling, chain.

    Emits one row per (N, t, lambda) with the worst per-replica second
    difference attached to interior lambdas, the decoupling residual at
    lambda = 0, and (for differentiable transforms) a chain row comparing
    tilt0 b^2 N <R^2>_t to the tilt-convexity upper bound.
    """
    lam_grid = list(config.lambda_grid)
    t_grid = list(config.t_grid) if config.t_grid else [0.2]
    rows = []
    for n in config.n_list:
        for t in t_grid:
            q = np.vstack(map_replicas(
                lambda r: interp.replica_coupled_fe(config.spec, n, config.beta, t,
                                                    lam_grid, config.seed, r,
                                                    config.field_r),
                config.replicas, threads))
            d2_min = np.diff(q, n=2, axis=1).min(axis=0) if len(lam_grid) >= 3 else None
            for j, lam in enumerate(lam_grid):
                extra = {}
                if d2_min is not None and 1 <= j < len(lam_grid) - 1:
                    extra["min_replica_second_diff"] = float(d2_min[j - 1])
                if lam == 0.0:
                    # at zero tilt the pair free energy must split exactly
                    decoupled = np.array(map_replicas(
                        lambda r: _pair_sum(config, n, t, r),
                        config.replicas, threads))
                    extra["max_decoupling_residual"] = float(
                        np.max(np.abs(q[:, j] - decoupled)))
                m, se = _mean_se(q[:, j])
                rows.append(ResultRow(study=config.study, n=n, t=t, lam=lam,
                                      estimate=m, std_error=se, extra=extra))
            if not config.spec.is_step:
                lhs, rhs, margin = interp.chained_tilt_inequality(
                    config.spec, n, config.beta, t, config.replicas, config.seed)
                rows.append(ResultRow(
                    study=config.study, n=n, t=t, lam=None,
                    estimate=margin.value, std_error=margin.std_error,
                    extra={"chain_lhs": lhs.value, "chain_rhs": rhs.value,
                           "holds_within_ci":
                               margin.value >= -3.0 * margin.std_error}))
    return rows


def _pair_sum(config: ExperimentConfig, n: int, t: float, r: int) -> float:
    from .sk import free_energy_exact

    state = interp.draw_interp_state(config.spec, n, config.seed, r)
    pair = interp.realize_coupled(state, t, config.beta, config.field_r)
    return (free_energy_exact(pair.sys_a).log_partition
            + free_energy_exact(pair.sys_b).log_partition)


def run_holder_check(config: ExperimentConfig, threads: int | None = None) -> list[ResultRow]:
    """Slope interpolation inequality at (s, t) = t_grid, one row per N."""
    s, t = config.t_grid
    rows = []
    for n in config.n_list:
        rep = interp.verify_slope_holder(config.spec, n, config.beta, s, t,
                                         config.replicas, config.seed)
        rows.append(ResultRow(
            study=config.study, n=n, t=t, lam=None,
            estimate=rep.rhs - rep.lhs, std_error=rep.std_error,
            extra={"s": s, "lhs": rep.lhs, "rhs": rep.rhs,
                   "holds_within_ci": rep.holds_within_ci}))
    return rows


def run_bound_ratios(config: ExperimentConfig, threads: int | None = None) -> list[ResultRow]:
    """Measured Var(F_N) against the closed-form bounds at K = k_const."""
    rows = []
    for n in config.n_list:
        vals = np.array(map_replicas(
            lambda r: interp.replica_free_energy(config.spec, n, config.beta,
                                                 config.seed, r, config.field_r),
            config.replicas, threads))
        est = estimate_variance_jackknife(vals)
        inputs = bounds_mod.BoundInputs.from_spec(config.spec, n, config.beta,
                                                  c_const=config.c_const,
                                                  k_const=config.k_const)
        rhs_gen = bounds_mod.variance_bound_general(inputs, config.spec)
        extra = {"rhs_general": rhs_gen, "ratio_general": est["var"] / rhs_gen}
        if config.spec.fprime3 is not None:
            rhs_smooth = bounds_mod.variance_bound_smooth(inputs)
            extra.update(rhs_smooth=rhs_smooth, ratio_smooth=est["var"] / rhs_smooth)
        rows.append(ResultRow(study=config.study, n=n, t=None, lam=None,
                              estimate=est["var"], std_error=est["std_error"],
                              extra=extra))
    return rows


_RUNNERS = {
    "variance_scaling": run_variance_scaling,
    "product_curve": run_product_curve,
    "overlap_curve": run_overlap_curve,
    "tilt_convexity": run_tilt_convexity,
    "holder_check": run_holder_check,
    "bound_ratios": run_bound_ratios,
}


def run_study(config: ExperimentConfig, threads: int | None = None) -> list[ResultRow]:
    return _RUNNERS[config.study](config, threads)


# ---------------------------------------------------------------------------
# CSV / manifest serialization

CSV_HEADER = "study,N,t,lambda,estimate,std_error,extra_json"


def _fmt(value: float | None) -> str:
    return "" if value is None else repr(float(value))


def rows_to_csv(rows) -> str:
    import csv
    import io

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER.split(","))
    for row in rows:
        writer.writerow([row.study, str(row.n), _fmt(row.t), _fmt(row.lam),
                         repr(float(row.estimate)), repr(float(row.std_error)),
                         json.dumps(row.extra, sort_keys=True)])
    return buf.getvalue()


def rows_from_csv(text: str) -> list[ResultRow]:
    import csv
    import io

    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if header != CSV_HEADER.split(","):
        raise ConfigError(f"unexpected CSV header: {header}")
    rows = []
    for rec in reader:
        study, n, t, lam, est, se, extra = rec
        rows.append(ResultRow(
            study=study, n=int(n),
            t=float(t) if t else None, lam=float(lam) if lam else None,
            estimate=float(est), std_error=float(se), extra=json.loads(extra)))
    return rows


def manifest_text(config: ExperimentConfig) -> str:
    import hashlib
    import platform

    from . import __version__

    digest = hashlib.sha256(config.canonical_text().encode()).hexdigest()
    return "\n".join([
        f"config_sha256 = {digest}",
        f"study = {config.study}",
        f"seed = {config.seed}",
        f"sklab_version = {__version__}",
        f"numpy_version = {np.__version__}",
        f"python_version = {platform.python_version()}",
    ]) + "\n"
