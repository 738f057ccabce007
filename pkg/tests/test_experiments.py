import math

import numpy as np
import pytest

from sklab.disorder import make_gaussian, make_rademacher, make_uniform
from sklab.errors import ConfigError, TooFewSamplesError
from sklab.experiments import (
    CANONICAL_N_LIST,
    ExperimentConfig,
    ResultRow,
    estimate_variance_jackknife,
    manifest_text,
    map_replicas,
    rows_from_csv,
    rows_to_csv,
    run_study,
)


class TestJackknife:
    def test_constant_list(self):
        est = estimate_variance_jackknife([3.0] * 12)
        assert est["var"] == 0.0
        assert est["std_error"] == 0.0

    def test_plus_minus_one(self):
        est = estimate_variance_jackknife([-1.0, 1.0] * 50)
        assert est["var"] == pytest.approx(100.0 / 99.0, abs=1e-10)

    def test_too_few(self):
        with pytest.raises(TooFewSamplesError):
            estimate_variance_jackknife([1.0, 2.0])

    def test_calibration_on_normals(self):
        # sd of the sample variance of n standard normals ~ sqrt(2/n)
        n = 10_000
        theory = math.sqrt(2.0 / n)
        rng = np.random.default_rng(6)
        for _ in range(20):
            est = estimate_variance_jackknife(rng.standard_normal(n))
            assert theory / 1.5 <= est["std_error"] <= theory * 1.5

    def test_matches_slow_jackknife(self):
        rng = np.random.default_rng(8)
        x = rng.standard_normal(40)
        fast = estimate_variance_jackknife(x)
        loo = np.array([np.var(np.delete(x, i), ddof=1) for i in range(len(x))])
        slow_se = math.sqrt((len(x) - 1) / len(x) * np.sum((loo - loo.mean()) ** 2))
        assert fast["var"] == pytest.approx(np.var(x, ddof=1), rel=1e-12)
        assert fast["std_error"] == pytest.approx(slow_se, rel=1e-10)


class TestMapReplicas:
    def test_order_and_thread_independence(self):
        serial = map_replicas(lambda r: r * r, 37, threads=1)
        threaded = map_replicas(lambda r: r * r, 37, threads=4)
        assert serial == threaded == [r * r for r in range(37)]


class TestConfigValidation:
    def base(self, **kw):
        args = dict(spec=make_gaussian(), beta=1.0, study="variance_scaling",
                    n_list=(4, 6), replicas=50, seed=1)
        args.update(kw)
        return ExperimentConfig(**args)

    def test_defaults(self):
        config = ExperimentConfig(spec=make_gaussian(), beta=1.0,
                                  study="variance_scaling")
        assert config.n_list == CANONICAL_N_LIST
        assert config.replicas == 4000

    def test_unknown_study(self):
        with pytest.raises(ConfigError):
            self.base(study="annealing")

    def test_exact_cap(self):
        with pytest.raises(ConfigError):
            self.base(n_list=(22,))

    def test_pair_cap(self):
        with pytest.raises(ConfigError):
            self.base(study="tilt_convexity", n_list=(11,),
                      t_grid=(0.2,), lambda_grid=(0.0, 0.2))

    def test_grid_sorted(self):
        with pytest.raises(ConfigError):
            self.base(study="product_curve", t_grid=(0.5, 0.1))

    def test_grid_range(self):
        with pytest.raises(ConfigError):
            self.base(study="product_curve", t_grid=(0.1, 1.5))

    def test_missing_grid(self):
        with pytest.raises(ConfigError):
            self.base(study="overlap_curve")

    def test_holder_needs_smooth(self):
        with pytest.raises(ConfigError):
            self.base(spec=make_rademacher(), study="holder_check", t_grid=(0.1, 0.5))

    def test_replica_floor(self):
        with pytest.raises(ConfigError):
            self.base(replicas=2)


class TestVarianceScalingStudy:
    def test_zero_temperature(self):
        config = ExperimentConfig(spec=make_gaussian(), beta=1e-9,
                                  study="variance_scaling", n_list=(4, 6),
                                  replicas=60, seed=2)
        rows = run_study(config, threads=1)
        assert [r.n for r in rows] == [4, 6]
        for row in rows:
            assert row.estimate <= 1e-12
            assert row.extra["var_over_n"] == pytest.approx(row.estimate / row.n)

    def test_threads_do_not_change_bytes(self):
        config = ExperimentConfig(spec=make_uniform(), beta=1.0,
                                  study="variance_scaling", n_list=(4, 6),
                                  replicas=80, seed=3)
        one = rows_to_csv(run_study(config, threads=1))
        four = rows_to_csv(run_study(config, threads=4))
        assert one == four

    @pytest.mark.parametrize("maker", [make_gaussian, make_uniform])
    def test_split_half_consistency(self, maker):
        # two half-replica estimates agree within 3x their combined errors,
        # over a batch of regression seeds
        from sklab.interp import replica_free_energy

        spec = maker()
        for seed in range(10):
            vals = np.array([replica_free_energy(spec, 5, 1.0, seed, r)
                             for r in range(400)])
            lo = estimate_variance_jackknife(vals[:200])
            hi = estimate_variance_jackknife(vals[200:])
            sigma = math.hypot(lo["std_error"], hi["std_error"])
            assert abs(lo["var"] - hi["var"]) <= 3.0 * sigma, f"seed {seed}"


class TestProductCurveStudy:
    def test_gap_matches_direct_variance(self):
        config = ExperimentConfig(spec=make_gaussian(), beta=1.0,
                                  study="product_curve", n_list=(5,),
                                  replicas=600, seed=4, t_grid=(0.0, 1.0))
        rows = run_study(config, threads=2)
        summary = [r for r in rows if r.t is None]
        assert len(summary) == 1
        assert abs(summary[0].extra["gap_vs_var_sigmas"]) <= 3.0

    def test_difference_columns(self):
        config = ExperimentConfig(spec=make_gaussian(), beta=0.7,
                                  study="product_curve", n_list=(4,),
                                  replicas=50, seed=5, t_grid=(0.2, 0.5, 0.8))
        rows = run_study(config, threads=1)
        by_t = {r.t: r for r in rows if r.t is not None}
        assert "d1" in by_t[0.5].extra and "d2" in by_t[0.8].extra
        assert "d1" not in by_t[0.2].extra


class TestOverlapCurveStudy:
    def test_zero_temperature_floor_and_flags(self):
        config = ExperimentConfig(spec=make_gaussian(), beta=1e-9,
                                  study="overlap_curve", n_list=(4, 8),
                                  replicas=30, seed=6, t_grid=(0.2, 0.9999))
        rows = run_study(config, threads=1)
        for row in rows:
            assert row.estimate == pytest.approx(1.0 / row.n, abs=1e-10)
        flags = {(r.n, r.t): r.extra["admissible"] for r in rows}
        assert all(flags[(n, 0.2)] for n in (4, 8))
        assert "bound_ref" in rows[0].extra

    def test_diagonal_floor_at_t_one(self):
        config = ExperimentConfig(spec=make_gaussian(), beta=1.0,
                                  study="overlap_curve", n_list=(8,),
                                  replicas=40, seed=7, t_grid=(1.0,))
        row = run_study(config, threads=1)[0]
        assert row.estimate >= 1.0 / 8.0
        assert row.extra["admissible"] is False


class TestTiltConvexityStudy:
    def test_convexity_decoupling_and_chain(self):
        config = ExperimentConfig(spec=make_gaussian(), beta=0.3,
                                  study="tilt_convexity", n_list=(6,),
                                  replicas=60, seed=8, t_grid=(0.2,),
                                  lambda_grid=(0.0, 0.15, 0.3, 0.45))
        rows = run_study(config, threads=2)
        zero = [r for r in rows if r.lam == 0.0][0]
        assert zero.extra["max_decoupling_residual"] <= 1e-10
        interior = [r for r in rows if r.lam is not None
                    and "min_replica_second_diff" in r.extra]
        assert interior and all(
            r.extra["min_replica_second_diff"] >= -1e-9 for r in interior)
        chain = [r for r in rows if r.lam is None]
        assert len(chain) == 1
        assert chain[0].extra["holds_within_ci"]

    def test_step_disorder_has_no_chain_row(self):
        config = ExperimentConfig(spec=make_rademacher(), beta=0.3,
                                  study="tilt_convexity", n_list=(5,),
                                  replicas=30, seed=9, t_grid=(0.2,),
                                  lambda_grid=(0.0, 0.2))
        rows = run_study(config, threads=1)
        assert all(r.lam is not None for r in rows)


class TestHolderStudy:
    def test_row_schema(self):
        config = ExperimentConfig(spec=make_gaussian(), beta=0.7,
                                  study="holder_check", n_list=(5,),
                                  replicas=200, seed=10, t_grid=(0.1, 0.5))
        row = run_study(config, threads=1)[0]
        assert row.extra["holds_within_ci"]
        assert row.extra["s"] == 0.1 and row.t == 0.5
        assert row.estimate == pytest.approx(row.extra["rhs"] - row.extra["lhs"])


class TestBoundRatiosStudy:
    def test_schema_and_smooth_column(self):
        config = ExperimentConfig(spec=make_uniform(), beta=1.0,
                                  study="bound_ratios", n_list=(4, 6),
                                  replicas=100, seed=11)
        rows = run_study(config, threads=1)
        for row in rows:
            assert row.extra["ratio_general"] == pytest.approx(
                row.estimate / row.extra["rhs_general"])
            assert "ratio_smooth" in row.extra

    def test_step_disorder_general_only(self):
        config = ExperimentConfig(spec=make_rademacher(), beta=1.0,
                                  study="bound_ratios", n_list=(4,),
                                  replicas=100, seed=12)
        row = run_study(config, threads=1)[0]
        assert "ratio_smooth" not in row.extra


class TestSerialization:
    def rows(self):
        return [
            ResultRow(study="variance_scaling", n=4, t=None, lam=None,
                      estimate=1.25, std_error=0.03, extra={"var_over_n": 0.3125}),
            ResultRow(study="tilt_convexity", n=6, t=0.2, lam=0.1,
                      estimate=-2.5e-3, std_error=0.0,
                      extra={"note": 'quoted "text", with comma', "flag": True}),
        ]

    def test_header(self):
        text = rows_to_csv(self.rows())
        assert text.splitlines()[0] == "study,N,t,lambda,estimate,std_error,extra_json"

    def test_round_trip_identity(self):
        text = rows_to_csv(self.rows())
        assert rows_to_csv(rows_from_csv(text)) == text

    def test_round_trip_values(self):
        back = rows_from_csv(rows_to_csv(self.rows()))
        assert back[0].estimate == 1.25
        assert back[1].lam == 0.1
        assert back[1].extra["note"] == 'quoted "text", with comma'

    def test_rejects_foreign_header(self):
        with pytest.raises(ConfigError):
            rows_from_csv("a,b,c\n1,2,3\n")

    def test_estimate_must_be_finite(self):
        with pytest.raises(ValueError):
            ResultRow(study="x", n=1, t=None, lam=None,
                      estimate=float("nan"), std_error=0.0)

    def test_manifest_contents(self):
        config = ExperimentConfig(spec=make_gaussian(), beta=1.0,
                                  study="variance_scaling", replicas=10, seed=42)
        text = manifest_text(config)
        assert "config_sha256 = " in text
        assert "seed = 42" in text
        assert "numpy_version" in text
