import hashlib
import itertools
import json
import warnings

import numpy as np
import pytest
from numpy.testing import assert_allclose

from lagueb.harness import (
    ExperimentReport, StudyConfig, StudyError, draw_sample, emit_report, estimate_rate,
    fitted_predictor, load_report, read_report_csv, run_replication, run_study,
    theoretical_exponent,
)
from lagueb.mixing import MixingModel
from lagueb.priors import PriorModel
from lagueb.streams import PILOT_KEY, pilot_stream, stream, stream_key


def exp_config(**kw):
    base = dict(mixing=MixingModel.exponential(), prior=PriorModel.gamma(2, 1),
                sample_sizes=(100, 200), replications=2, master_seed=7)
    base.update(kw)
    return StudyConfig(**base)


def oracle_predictor(config, data):
    oracle = config.oracle
    return lambda ys: np.array([oracle.bayes_rule(y) for y in np.atleast_1d(ys)])


def synthetic_report(sizes, ys, mse):
    rows = [{"n": int(n), "y": float(y), "mse": float(mse[i, j]), "se": 0.01, "reps": 10}
            for i, n in enumerate(sizes) for j, y in enumerate(ys)]
    return ExperimentReport(config={}, rows=rows)


class TestStudyConfig:
    @pytest.mark.parametrize("kw", [
        dict(sample_sizes=(200, 100)), dict(sample_sizes=(100, 100)),
        dict(replications=1), dict(eval_points=(-1.0,)),
        dict(prior=PriorModel.uniform(0.1, 5.0), mixing=MixingModel.uniform(0.5, 3)),
        dict(r_star=0.0),
    ])
    def test_rejects(self, kw):
        with pytest.raises(ValueError):
            exp_config(**kw)

    def test_echo_mirrors_config_sections(self):
        echo = exp_config().to_dict()
        assert list(echo) == ["mixing", "prior", "estimator", "study"]
        assert echo["study"]["master_seed"] == 7

    def test_theoretical_exponent(self):
        assert theoretical_exponent(1, 1) == -0.5
        assert theoretical_exponent(1, 0) == -0.5
        assert_allclose(theoretical_exponent(2, 7 / 3), -4 / (7 / 3 + 5))


class TestStreams:
    def test_no_key_collisions(self):
        keys = {stream_key(11, n, rep)
                for n, rep in itertools.product([10, 100, 1000, 10**4, 10**5], range(200))}
        keys.add(stream_key(11, *PILOT_KEY))
        assert len(keys) == 5 * 200 + 1

    def test_pilot_is_reserved_key(self):
        a = pilot_stream(3).random(4)
        b = stream(3, *PILOT_KEY).random(4)
        assert_allclose(a, b)

    def test_reproducible(self):
        assert stream(5, 100, 3).random(8).tobytes() == stream(5, 100, 3).random(8).tobytes()

    def test_seed_changes_stream(self):
        assert stream(5, 100, 3).random() != stream(6, 100, 3).random()


class TestReplication:
    def test_deterministic_bytes(self):
        cfg = exp_config()
        a = run_replication(cfg, 100, 1)
        b = run_replication(cfg, 100, 1)
        assert a.tobytes() == b.tobytes()

    def test_oracle_predictor_zero_error(self):
        cfg = exp_config()
        errs = run_replication(cfg, 200, 0, predictor=oracle_predictor)
        assert np.all(errs == 0)

    def test_unknown_size(self):
        with pytest.raises(ValueError):
            run_replication(exp_config(), 150, 0)

    @pytest.mark.slow
    def test_large_sample_envelope(self):
        # squared error at y = 1 below 1e-2 in at least 95% of replications
        cfg = exp_config(sample_sizes=(10**5,), replications=20, eval_points=(1.0,))
        errs = np.array([run_replication(cfg, 10**5, rep)[0] for rep in range(20)])
        assert np.mean(errs < 1e-2) >= 0.95

    def test_risk_decomposition(self):
        cfg = exp_config(sample_sizes=(500,), eval_points=(0.3, 1.0, 2.0))
        truth = np.array([cfg.oracle.bayes_rule(y) for y in cfg.eval_points])
        diffs = []
        for rep in range(30):
            data = draw_sample(cfg, 500, stream(cfg.master_seed, 500, rep))
            diffs.append(fitted_predictor(cfg, data)(np.array(cfg.eval_points)) - truth)
        diffs = np.array(diffs)
        assert np.all((diffs**2).mean(axis=0) >= diffs.mean(axis=0) ** 2)


class TestRunStudy:
    def test_two_sizes_no_slope(self):
        report = run_study(exp_config())
        assert len({r["n"] for r in report.rows}) == 2
        assert len(report.rows) == 2 * 3
        assert report.slopes is None
        assert all(r["reps"] == 2 and r["se"] > 0 for r in report.rows)

    def test_slopes_with_three_sizes(self):
        report = run_study(exp_config(sample_sizes=(100, 200, 400)))
        assert set(report.slopes) == {"per_y", "pooled", "theoretical"}
        assert len(report.slopes["per_y"]) == 3

    def test_standard_error_scaling(self):
        ratios = []
        for seed in range(3):
            se = []
            for reps in (100, 200):
                rep = run_study(exp_config(sample_sizes=(500,), replications=reps,
                                           master_seed=seed))
                se.append(np.array([r["se"] for r in rep.rows]))
            ratios.append(se[1] / se[0])
        ratio = np.mean(ratios)
        assert abs(ratio / (1 / np.sqrt(2)) - 1) < 0.3

    @pytest.mark.slow
    def test_risk_nonincreasing(self):
        cfg = StudyConfig(mixing=MixingModel.rayleigh(), prior=PriorModel.gamma(2, 1),
                          sample_sizes=(500, 2000, 8000), replications=30, master_seed=1)
        sizes, ys, mse, se = run_study(cfg).mse_table()
        for i in range(len(sizes) - 1):
            assert np.all(mse[i + 1] <= mse[i] + se[i])

    def test_failures_recorded(self):
        calls = {"n": 0}

        def flaky(config, data):
            # single-threaded, so the first calls are the first n=100 reps
            calls["n"] += 1
            if calls["n"] <= 3:
                raise RuntimeError("boom")
            return oracle_predictor(config, data)

        report = run_study(exp_config(replications=20), predictor=flaky)
        assert [(f["n"], f["rep"]) for f in report.failures] == [(100, 0), (100, 1), (100, 2)]
        assert [r["reps"] for r in report.rows if r["n"] == 100] == [17, 17, 17]

    def test_too_many_failures(self):
        def broken(config, data):
            raise RuntimeError("always")

        with pytest.raises(StudyError):
            run_study(exp_config(), predictor=broken)

    def test_thread_independence(self):
        cfg = exp_config(sample_sizes=(100, 200, 300), replications=5)
        a = run_study(cfg, threads=1).to_dict()
        b = run_study(cfg, threads=4).to_dict()
        assert json.dumps(a) == json.dumps(b)


class TestEstimateRate:
    def test_exact_power_law(self):
        sizes = np.array([100, 1000, 10000, 100000])
        ys = [0.5, 1.0]
        mse = np.column_stack([1.0 / sizes, 3.0 / sizes])
        rate = estimate_rate(synthetic_report(sizes, ys, mse))
        assert abs(rate.slope + 1) < 1e-12
        assert all(abs(p["slope"] + 1) < 1e-12 for p in rate.per_y)

    def test_noisy_slope_coverage(self):
        rng = np.random.default_rng(0)
        sizes = np.array([100, 300, 1000, 3000, 10000])
        hits = 0
        trials = 400
        for _ in range(trials):
            mse = np.exp(-0.5 * np.log(sizes)[:, None] + rng.normal(0, 0.2, (5, 3)))
            rate = estimate_rate(synthetic_report(sizes, [0.2, 0.5, 1.0], mse))
            hits += abs(rate.slope + 0.5) <= 2 * rate.se
        assert hits / trials >= 0.92

    def test_zero_rows_dropped(self):
        sizes = np.array([10, 100, 1000, 10000])
        mse = np.column_stack([1.0 / sizes, 1.0 / sizes])
        mse[1, 0] = 0.0
        with pytest.warns(RuntimeWarning):
            rate = estimate_rate(synthetic_report(sizes, [0.5, 1.0], mse))
        assert abs(rate.slope + 1) < 1e-12

    def test_needs_three_sizes(self):
        with pytest.raises(ValueError):
            estimate_rate(synthetic_report([10, 20], [1.0], np.ones((2, 1))))


@pytest.fixture(scope="module")
def report():
    return run_study(exp_config(sample_sizes=(100, 200, 400), replications=3))


class TestEmit:
    def test_json_round_trip(self, report, tmp_path):
        path = emit_report(report, "json", tmp_path / "r.json")
        back = load_report(path)
        assert back.to_dict() == report.to_dict()

    def test_json_schema_fields(self, report, tmp_path):
        doc = json.loads(emit_report(report, "json", tmp_path / "r.json").read_text())
        assert doc["schema_version"] == 1
        assert {"config", "rows", "slopes"} <= set(doc)
        assert set(doc["rows"][0]) == {"n", "y", "mse", "se", "reps"}

    def test_csv_shape_and_values(self, report, tmp_path):
        path = emit_report(report, "csv", tmp_path / "r.csv")
        lines = path.read_text().splitlines()
        assert len(lines) == 3 * 3 + 1 + 1
        assert lines[0] == "n,y,mse,se,reps"
        assert lines[-1].startswith("# pooled_slope=")
        rows = read_report_csv(path)
        for a, b in zip(rows, report.rows):
            assert a == b

    def test_byte_identical(self, report, tmp_path):
        digests = set()
        for i in range(3):
            for fmt in ("json", "csv"):
                p = emit_report(report, fmt, tmp_path / f"{i}.{fmt}")
                digests.add((fmt, hashlib.sha256(p.read_bytes()).hexdigest()))
        assert len(digests) == 2

    def test_unknown_format(self, report, tmp_path):
        with pytest.raises(ValueError):
            emit_report(report, "xml", tmp_path / "r.xml")


def test_no_slope_warning_on_clean_data():
    sizes = np.array([10, 100, 1000])
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        estimate_rate(synthetic_report(sizes, [1.0], (1.0 / sizes)[:, None]))
