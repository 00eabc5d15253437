import json
import os

import pytest

import reporting
from config import ExperimentConfig
from experiments import run_experiment
from inequality_suite import InequalitySuite

CHECK_NAMES = ["jackson_ratios", "parseval", "kernel_l1", "young", "v_shadow", "comparison",
               "variancing_power", "tsybakov", "epsilon_star"]


def small_suite(**kwargs):
    return InequalitySuite(comparison_nets=20, variance_nets=12, population_n=5000, oracle_tuples=4, **kwargs)


@pytest.mark.parametrize("name", CHECK_NAMES)
def test_each_check_passes(name):
    result = small_suite().run(only=[name])
    assert [c["name"] for c in result["checks"]] == [name]
    check = result["checks"][0]
    assert check["passed"], check
    assert result["success"]


def test_jackson_cases_carry_errors():
    check = small_suite().run(only=["jackson_ratios"])["checks"][0]
    errors = [c for c in check["cases"] if "error" in c]
    assert {c["N"] for c in errors} == {8, 16, 32, 64}


def test_raising_check_is_reported_not_propagated(monkeypatch):
    def broken(self):
        raise ValueError("kernel grid exploded")

    monkeypatch.setattr(InequalitySuite, "check_kernel_l1", broken)
    result = small_suite().run(only=["kernel_l1", "tsybakov"])
    by_name = {c["name"]: c for c in result["checks"]}
    assert not result["success"]
    assert not by_name["kernel_l1"]["passed"]
    assert "kernel grid exploded" in by_name["kernel_l1"]["detail"]
    assert by_name["tsybakov"]["passed"]


def test_run_and_write(tmp_path, monkeypatch):
    cfg = ExperimentConfig.defaults("inequality_suite").with_overrides(output_dir=str(tmp_path))
    original = InequalitySuite.__init__

    def smaller(self, cfg=None, output_dir=None, **kwargs):
        original(self, cfg, output_dir, comparison_nets=10, variance_nets=12, population_n=5000, oracle_tuples=2)

    monkeypatch.setattr(InequalitySuite, "__init__", smaller)
    outcome = run_experiment(cfg)
    assert outcome.passed
    assert os.path.exists(outcome.svg_path)
    rows = reporting.read_results_csv(outcome.csv_path)
    assert {row["check"] for row in rows} == set(CHECK_NAMES)
    with open(outcome.report_path) as fh:
        report = json.load(fh)
    assert report["passed"] is True
    assert report["config_hash"] == cfg.config_hash()
    assert len(report["assertions"]) == len(CHECK_NAMES)


def test_young_covers_every_family_and_exponent():
    check = small_suite().run(only=["young"])["checks"][0]
    labels = {c["case"] for c in check["cases"]}
    assert len(labels) == 24
    assert {"random_trig d=2 p=1.5", "sine_product d=1 p=inf", "polynomial_bump d=2 p=1"} <= labels


def test_jackson_ratios_use_the_second_order_band():
    check = small_suite().run(only=["jackson_ratios"])["checks"][0]
    ratios = [c for c in check["cases"] if "ratio" in c["case"]]
    assert len(ratios) == 6
    assert all(c["limit"] == [3.4, 4.6] and c["passed"] for c in ratios)
