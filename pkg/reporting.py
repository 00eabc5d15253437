"""Result files of an experiment: results.csv, plot.svg and report.json.

The CSV is the single source of truth. The plot is regenerated from it and
nothing in any of the three files depends on wall-clock time, so re-running a
config reproduces them byte for byte.
"""
import csv
import json
import logging
import math
import os
from dataclasses import asdict, dataclass

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

logger = logging.getLogger(__name__)

CSV_NAME = "results.csv"
SVG_NAME = "plot.svg"
REPORT_NAME = "report.json"

COMMON_COLUMNS = (
    "experiment", "config_hash", "seed", "m", "N", "truncated", "d", "p", "eta", "tau", "theta",
    "C1", "C2", "C3", "C4", "C5", "C_theta", "C0prime", "error", "se",
)
TEXT_COLUMNS = ("experiment", "config_hash", "family")

matplotlib.rcParams["svg.hashsalt"] = "korobov-relu-rates"


@dataclass(frozen=True)
class Assertion:
    name: str
    passed: bool
    detail: str = ""

    def to_dict(self):
        return asdict(self)


def format_value(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    if isinstance(value, np.integer):
        return str(int(value))
    return str(value)


def parse_value(text):
    """Inverse of format_value for the numeric columns; other text passes through."""
    if text == "":
        return None
    if text in ("true", "false"):
        return text == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def result_columns(extra=()):
    return list(COMMON_COLUMNS) + [c for c in extra if c not in COMMON_COLUMNS]


def write_results_csv(rows, path, extra_columns=()):
    """RFC-4180 CSV (CRLF line ends, minimal quoting), one row per experiment cell."""
    columns = result_columns(extra_columns)
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_value(row.get(column)) for column in columns])
    logger.info(f"Wrote {len(rows)} rows to {path}")
    return path


def read_results_csv(path):
    with open(path, "r", newline="", encoding="utf-8") as fh:
        return [{key: value if key in TEXT_COLUMNS else parse_value(value) for key, value in row.items()}
                for row in csv.DictReader(fh)]


def medians_by(rows, size_key, value_key="error"):
    """Sorted (size, median value) pairs; rows with no value are skipped."""
    groups = {}
    for row in rows:
        value = row.get(value_key)
        if value is None or row.get(size_key) is None:
            continue
        groups.setdefault(row[size_key], []).append(float(value))
    return [(size, float(np.median(groups[size]))) for size in sorted(groups)]


def plot_from_csv(csv_path, svg_path, size_key, fit=None, theoretical=None, title=""):
    """Log-log plot of every cell, the per-size medians and the fitted line."""
    rows = read_results_csv(csv_path)
    medians = [(s, v) for s, v in medians_by(rows, size_key) if s > 0 and v > 0]
    cells = [(row[size_key], row["error"]) for row in rows
             if row.get("error") is not None and row["error"] > 0 and row.get(size_key)]

    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    try:
        if cells:
            xs, ys = zip(*cells)
            ax.scatter(xs, ys, s=8, alpha=0.35, color="tab:gray", label="cells")
        if medians:
            xs, ys = zip(*medians)
            ax.plot(xs, ys, "o", color="tab:blue", label="median")
            if fit is not None:
                grid = np.array(xs, dtype=float)
                ax.plot(grid, np.exp(fit.intercept) * grid ** fit.slope, "-", color="tab:blue",
                        label=f"fit slope {fit.slope:.3f}")
            if theoretical is not None:
                grid = np.array(xs, dtype=float)
                anchor = ys[0] / grid[0] ** theoretical
                ax.plot(grid, anchor * grid ** theoretical, "--", color="tab:red",
                        label=f"theory slope {theoretical:.3f}")
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel(size_key)
        ax.set_ylabel("error")
        ax.set_title(title)
        ax.legend(loc="best")
        fig.tight_layout()
        fig.savefig(svg_path, format="svg", metadata={"Date": None})
    finally:
        plt.close(fig)
    logger.info(f"Wrote plot {svg_path}")
    return svg_path


def json_safe(value):
    if isinstance(value, dict):
        return {str(k): json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [json_safe(v) for v in value]
    if isinstance(value, (np.floating, float)):
        value = float(value)
        if math.isnan(value):
            return None
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, Assertion):
        return value.to_dict()
    return value


def write_report(report, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(json_safe(report), fh, indent=2, sort_keys=True)
        fh.write("\n")
    logger.info(f"Wrote report {path}")
    return path


def read_text(path):
    if path is None or not os.path.exists(path):
        return None
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()
