import json
import math

import numpy as np
import pytest

import reporting
from rates import fit_rate


def sample_rows():
    rows = []
    for m, err in ((8, 0.5), (16, 0.2), (32, 0.09)):
        for seed in range(3):
            rows.append({"experiment": "approx_rate", "config_hash": "0123abcd", "seed": seed, "m": m, "N": 4,
                         "truncated": False, "p": math.inf, "theta": None, "error": err * (1 + 0.1 * seed),
                         "se": 0.0, "family": "sine_product"})
    return rows


class TestResultsCsv:
    def test_values_survive_the_file(self, tmp_path):
        path = tmp_path / "results.csv"
        rows = sample_rows()
        reporting.write_results_csv(rows, path, ("family",))
        back = reporting.read_results_csv(path)
        assert len(back) == len(rows)
        first = back[0]
        assert first["config_hash"] == "0123abcd"
        assert first["family"] == "sine_product"
        assert first["error"] == rows[0]["error"]
        assert first["truncated"] is False
        assert first["theta"] is None
        assert math.isinf(first["p"])

    def test_crlf_and_header(self, tmp_path):
        path = tmp_path / "results.csv"
        reporting.write_results_csv(sample_rows(), path, ("family",))
        raw = path.read_bytes()
        assert raw.count(b"\r\n") == len(sample_rows()) + 1
        header = raw.split(b"\r\n")[0].decode()
        assert header.split(",") == reporting.result_columns(("family",))

    def test_format_value(self):
        assert reporting.format_value(0.1) == "0.1"
        assert reporting.format_value(np.float64(1.0) / 3.0) == repr(1.0 / 3.0)
        assert reporting.format_value(True) == "true"
        assert reporting.format_value(np.int64(7)) == "7"
        assert reporting.format_value(-math.inf) == "-inf"

    def test_medians(self):
        medians = reporting.medians_by(sample_rows(), "m")
        assert [m for m, _ in medians] == [8, 16, 32]
        assert medians[0][1] == pytest.approx(0.55)


class TestPlot:
    def test_svg_is_reproducible(self, tmp_path):
        csv_path = tmp_path / "results.csv"
        reporting.write_results_csv(sample_rows(), csv_path)
        fit = fit_rate(reporting.medians_by(sample_rows(), "m"))
        first = reporting.plot_from_csv(csv_path, tmp_path / "a.svg", "m", fit, -1.2, title="approx")
        second = reporting.plot_from_csv(csv_path, tmp_path / "b.svg", "m", fit, -1.2, title="approx")
        assert (tmp_path / "a.svg").read_bytes() == (tmp_path / "b.svg").read_bytes()
        assert first != second
        assert b"<svg" in (tmp_path / "a.svg").read_bytes()


class TestReport:
    def test_json_safe(self):
        data = reporting.json_safe({"a": np.float64(math.nan), "b": math.inf, "c": np.int32(3),
                                    "d": [reporting.Assertion("slope", True, "ok")], "e": np.bool_(False)})
        assert data == {"a": None, "b": "inf", "c": 3, "d": [{"name": "slope", "passed": True, "detail": "ok"}],
                        "e": False}

    def test_report_file_is_sorted(self, tmp_path):
        path = tmp_path / "report.json"
        reporting.write_report({"z": 1, "a": [0.5]}, path)
        text = path.read_text()
        assert text.endswith("}\n")
        assert text.index('"a"') < text.index('"z"')
        assert json.loads(text) == {"a": [0.5], "z": 1}

    def test_read_text(self, tmp_path):
        assert reporting.read_text(None) is None
        assert reporting.read_text(tmp_path / "missing.txt") is None
