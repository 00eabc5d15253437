import dataclasses
import json
import os

import pytest

import experiments
import reporting
from config import ExperimentConfig, TrainBudget
from errors import PreconditionError
from experiments import (ExperimentRunner, count_inversions, covering_check, run_approx_rate, run_experiment,
                         run_learn_rate, run_noise_rate, seed_spread_se, slope_assertion)
from quadrature import QuadratureSpec
from rates import fit_rate


def small_approx(tmp_path, name="approx"):
    return ExperimentConfig("approx_rate", m_grid=(8, 16, 32), seeds=(0, 1),
                            quadrature=QuadratureSpec(points_per_axis=16, sup_points=64),
                            output_dir=str(tmp_path / name))


def small_learn(tmp_path, experiment="learn_rate", **overrides):
    cfg = ExperimentConfig.defaults(experiment).with_overrides(
        m_grid=(2, 3, 4), seeds=(0,), budget=TrainBudget(restarts=1, iterations=20), population_n=1000,
        n_max=500, output_dir=str(tmp_path / experiment))
    return cfg.with_overrides(**overrides)


class TestHelpers:
    def test_count_inversions(self):
        assert count_inversions([(1, 3.0), (2, 2.0), (3, 2.5), (4, 1.0)]) == 1
        assert count_inversions([(1, 1.0), (2, 1.0)]) == 0

    def test_slope_assertion(self):
        fit = fit_rate([(1, 1.0), (2, 0.5), (4, 0.25)])
        assert slope_assertion(fit, -1.2).passed
        assert not slope_assertion(fit, -3.0).passed
        assert not slope_assertion(None, -1.2).passed

    def test_seed_spread_se(self):
        assert seed_spread_se([1.0, 3.0]) == pytest.approx(1.0)
        assert seed_spread_se([2.0]) is None
        assert seed_spread_se([1.0, None, float("nan")]) is None


class TestApproxRate:
    def test_writes_all_three_files(self, tmp_path):
        cfg = small_approx(tmp_path)
        outcome = run_approx_rate(cfg)
        for path in (outcome.csv_path, outcome.svg_path, outcome.report_path):
            assert os.path.exists(path)
        rows = reporting.read_results_csv(outcome.csv_path)
        assert len(rows) == 6
        assert {row["config_hash"] for row in rows} == {cfg.config_hash()}
        assert all(row["certificate"] for row in rows)
        for m in (8, 16, 32):
            cell = [row for row in rows if row["m"] == m]
            spread = abs(cell[0]["error"] - cell[1]["error"]) / 2.0
            assert [row["se"] for row in cell] == pytest.approx([spread, spread])
        with open(outcome.report_path) as fh:
            report = json.load(fh)
        assert report["theoretical_exponent"] == pytest.approx(-1.2)
        assert report["target"] == "sine_product"
        assert {a["name"] for a in report["assertions"]} == {"slope", "monotone", "certificate"}
        assert report["passed"] == outcome.passed

    def test_files_do_not_depend_on_jobs(self, tmp_path):
        serial = run_approx_rate(small_approx(tmp_path, "serial"))
        threaded = run_approx_rate(small_approx(tmp_path, "threaded").with_overrides(jobs=2))
        for name in (reporting.CSV_NAME, reporting.SVG_NAME, reporting.REPORT_NAME):
            with open(os.path.join(os.path.dirname(serial.csv_path), name), "rb") as a, \
                    open(os.path.join(os.path.dirname(threaded.csv_path), name), "rb") as b:
                if name == reporting.REPORT_NAME:
                    left, right = json.load(a), json.load(b)
                    for report in (left, right):
                        del report["config"]["output_dir"]
                        del report["config"]["jobs"]
                    assert left == right
                else:
                    assert a.read() == b.read()

    def test_streams_cells_then_width_summary(self, tmp_path):
        runner = ExperimentRunner(small_approx(tmp_path))
        events = list(runner.stream_cells())
        assert [e["type"] for e in events] == ["cell", "cell", "width"] * 3
        assert [e["m"] for e in events if e["type"] == "width"] == [8, 16, 32]

    def test_failure_flushes_finished_cells(self, tmp_path, monkeypatch):
        real = experiments.theorem1_pipeline

        def failing(F, m, *args, **kwargs):
            if m >= 16:
                raise RuntimeError("quadrature blew up")
            return real(F, m, *args, **kwargs)

        monkeypatch.setattr(experiments, "theorem1_pipeline", failing)
        cfg = small_approx(tmp_path)
        with pytest.raises(RuntimeError):
            run_approx_rate(cfg)
        rows = reporting.read_results_csv(os.path.join(cfg.output_dir, reporting.CSV_NAME))
        assert [row["m"] for row in rows] == [8, 8]

    def test_wrong_config_rejected(self, tmp_path):
        with pytest.raises(PreconditionError):
            run_approx_rate(small_learn(tmp_path))

    @pytest.mark.slow
    def test_default_sweep_meets_the_rate(self, tmp_path):
        cfg = ExperimentConfig.defaults("approx_rate").with_overrides(output_dir=str(tmp_path))
        outcome = run_approx_rate(cfg, jobs=4)
        assert outcome.fit.slope <= -0.6
        assert outcome.passed


class TestLearningRates:
    def test_learn_rate_rows_and_bounds(self, tmp_path):
        outcome = run_learn_rate(small_learn(tmp_path))
        assert [row["N"] for row in outcome.rows] == [4, 11, 21]
        assert all(row["truncated"] is False for row in outcome.rows)
        bounds = outcome.report["bounds"]
        assert [b["m"] for b in bounds] == [2, 3, 4]
        assert all({"C6", "C7", "C8", "C6_bound"} <= set(b) for b in bounds)
        assert "decrease" in {a.name for a in outcome.report["assertions"]}
        assert outcome.report["theoretical_exponent"] == pytest.approx(-6.0 / 11.0)

    def test_truncation_is_flagged(self, tmp_path):
        outcome = run_learn_rate(small_learn(tmp_path, n_max=10))
        assert outcome.report["truncated_widths"] == [3, 4]

    def test_noise_rate(self, tmp_path):
        outcome = run_noise_rate(small_learn(tmp_path, "noise_rate", m_grid=(1, 2, 3)))
        assert [row["N"] for row in outcome.rows] == [1, 10, 41]
        assert outcome.report["theoretical_exponent"] == pytest.approx(-12.0 / 51.0)

    def test_noise_rate_needs_square_hinge(self, tmp_path):
        with pytest.raises(PreconditionError):
            run_noise_rate(small_learn(tmp_path, "noise_rate", eta=1.0))

    def test_noise_rate_needs_an_exponent(self, tmp_path):
        cfg = dataclasses.replace(small_learn(tmp_path, "noise_rate", family="hard_margin"), theta=None)
        with pytest.raises(PreconditionError):
            run_noise_rate(cfg)

    @pytest.mark.slow
    def test_default_learn_sweep(self, tmp_path):
        cfg = ExperimentConfig.defaults("learn_rate").with_overrides(output_dir=str(tmp_path))
        assert run_learn_rate(cfg, jobs=4).passed


class TestCoveringCheck:
    def test_default_grid_is_dominated(self, tmp_path):
        cfg = ExperimentConfig.defaults("covering_check").with_overrides(output_dir=str(tmp_path))
        outcome = covering_check(cfg)
        assert outcome.passed
        assert len(outcome.report["table"]) == 6
        assert all(row["se"] is None for row in reporting.read_results_csv(outcome.csv_path))
        assert outcome.report["fitted_C5"] > 0.0

    def test_large_widths_rejected(self, tmp_path):
        cfg = ExperimentConfig.defaults("covering_check").with_overrides(m_grid=(1, 3), output_dir=str(tmp_path))
        with pytest.raises(PreconditionError):
            covering_check(cfg)

    def test_dispatch(self, tmp_path):
        cfg = ExperimentConfig.defaults("covering_check").with_overrides(output_dir=str(tmp_path))
        assert run_experiment(cfg).experiment == "covering_check"
