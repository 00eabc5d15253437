"""Experiment drivers over the (m, seed) grid.

Each experiment streams finished cells, aggregates per-width medians in grid
order, fits the log-log rate and writes results.csv, plot.svg and report.json
into the output directory.
"""
import logging
import math
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from classification_core import LossSpec, classify, erm_train, truncate
from errors import FitFailureError, PartialResultError, PreconditionError
from korobov_space import make_test_function
from parallel import parallel_map
from rates import fit_rate, noise_sample_size, sample_size_coupling
import reporting
from risk_and_capacity import (covering_bound, covering_estimate, excess_generalization_error,
                               excess_misclassification_error, fit_c5_for_dominance,
                               learning_bound_constants, learning_rate_exponent, noise_rate_exponent)
from shallow_relu import (HypothesisConstraints, c5_formula, c_formula, theorem1_pipeline,
                          theoretical_approx_exponent)
from synthetic_distributions import describe, make_distribution, sample

logger = logging.getLogger(__name__)

SLOPE_FRACTION = 0.5
LEARN_DECREASE = 0.3
COVERING_EPSILONS = (0.05, 0.1, 0.2)
COVERING_SLACK = 0.5

APPROX_COLUMNS = ("family", "raw_error", "v", "jackson_error", "beta_cap", "certificate", "c5_certificate")
LEARN_COLUMNS = ("family", "raw_N", "excess_gen", "excess_gen_se", "empirical_risk", "certificate", "partial")
COVERING_COLUMNS = ("epsilon", "bound_log", "dominated", "fitted_C5")


@dataclass
class ExperimentOutcome:
    experiment: str
    report: dict
    rows: list = field(default_factory=list)
    fit: Optional[object] = None
    csv_path: Optional[str] = None
    svg_path: Optional[str] = None
    report_path: Optional[str] = None

    @property
    def passed(self):
        return bool(self.report.get("passed"))


def count_inversions(medians, tolerance=1e-12):
    """Number of consecutive increases in a sequence of (size, median) pairs."""
    values = [v for _, v in medians]
    return sum(1 for a, b in zip(values, values[1:]) if b > a * (1.0 + tolerance))


def seed_spread_se(values):
    """Standard error of the mean over seeds; None below two finite values."""
    values = [v for v in values if v is not None and math.isfinite(v)]
    if len(values) < 2:
        return None
    return float(np.std(values, ddof=1) / math.sqrt(len(values)))


def slope_assertion(fit, theoretical):
    target = SLOPE_FRACTION * theoretical
    if fit is None:
        return reporting.Assertion("slope", False, "no rate fit")
    return reporting.Assertion("slope", fit.slope <= target,
                               f"fitted slope {fit.slope:.4f} vs required <= {target:.4f}")


class ExperimentRunner:
    """Runs one configured experiment and writes its result files."""

    def __init__(self, cfg, output_dir=None, jobs=None):
        if cfg.experiment == "inequality_suite":
            raise PreconditionError("the inequality suite runs through InequalitySuite")
        self.cfg = cfg
        self.output_dir = output_dir or cfg.output_dir
        self.jobs = jobs or cfg.jobs
        self.config_hash = cfg.config_hash()
        self.rows = []
        self.spec = LossSpec(cfg.eta)
        self.target = None
        self.dist = None
        if cfg.experiment == "approx_rate":
            self.target = make_test_function(cfg.family, cfg.d, **cfg.family_params)
        elif cfg.experiment in ("learn_rate", "noise_rate"):
            self.dist = make_distribution(cfg.family, cfg.d, **cfg.family_params)
            if cfg.experiment == "noise_rate":
                if cfg.eta != 2.0:
                    raise PreconditionError(f"the noise-rate experiment uses the 2-norm loss, got eta={cfg.eta}")
                if self.theta is None:
                    raise PreconditionError(f"{self.dist.name} declares no noise exponent")

    @property
    def csv_path(self):
        return os.path.join(self.output_dir, reporting.CSV_NAME)

    @property
    def svg_path(self):
        return os.path.join(self.output_dir, reporting.SVG_NAME)

    @property
    def report_path(self):
        return os.path.join(self.output_dir, reporting.REPORT_NAME)

    @property
    def theta(self):
        if self.cfg.theta is not None:
            return self.cfg.theta
        return self.dist.theta if self.dist is not None else None

    @property
    def size_key(self):
        return {"approx_rate": "m", "covering_check": "epsilon"}.get(self.cfg.experiment, "N")

    @property
    def extra_columns(self):
        return {"approx_rate": APPROX_COLUMNS,
                "covering_check": COVERING_COLUMNS}.get(self.cfg.experiment, LEARN_COLUMNS)

    def theoretical_exponent(self):
        cfg = self.cfg
        if cfg.experiment == "approx_rate":
            return theoretical_approx_exponent(cfg.d, cfg.p)
        if cfg.experiment == "learn_rate":
            return learning_rate_exponent(cfg.d, cfg.p, cfg.eta, cfg.tau)
        if cfg.experiment == "noise_rate":
            return noise_rate_exponent(cfg.d, cfg.p, self.theta)
        return None

    # -- cells ----------------------------------------------------------------------

    def _base_row(self, seed, m, N=None, truncated=False):
        cfg = self.cfg
        consts = cfg.constants
        return {
            "experiment": cfg.experiment, "config_hash": self.config_hash, "seed": seed, "m": m, "N": N,
            "truncated": truncated, "d": cfg.d, "p": cfg.p, "eta": cfg.eta, "tau": cfg.tau, "theta": self.theta,
            "C1": consts.C1, "C2": consts.C2, "C3": consts.C3, "C4": consts.C4, "C5": consts.C5,
            "C_theta": consts.C_theta, "C0prime": consts.C0prime,
        }

    def _approx_cell(self, m, seed):
        cfg = self.cfg
        result = theorem1_pipeline(self.target, m, cfg.p, seed, cfg.quadrature, cfg.refit, constants=cfg.constants)
        diag = result.diagnostics
        row = self._base_row(seed, m, diag["N"])
        row.update({
            "error": result.error, "se": None, "family": cfg.family, "raw_error": diag["raw_error"],
            "v": diag["v"], "jackson_error": diag["jackson_error"], "beta_cap": diag["beta_cap"],
            "certificate": diag["certificate"], "c5_certificate": diag["c5_certificate"],
        })
        return row

    def _coupling(self, m):
        cfg = self.cfg
        if cfg.experiment == "noise_rate":
            return noise_sample_size(m, cfg.d, cfg.p, cfg.n_max)
        return sample_size_coupling(m, cfg.d, cfg.p, cfg.eta, cfg.tau, cfg.n_max)

    def _learn_cell(self, m, seed):
        cfg = self.cfg
        coupling = self._coupling(m)
        data = sample(self.dist, coupling.N, seed)
        c = HypothesisConstraints.from_c5(cfg.d, m, cfg.constants.C5)
        partial = False
        try:
            result = erm_train(data, c, self.spec, cfg.budget, seed, jobs=1)
        except PartialResultError as e:
            logger.warning(f"Cell m={m}, seed={seed}: {str(e)}; using best-so-far net")
            result, partial = e.best, True
        net = result.f_z
        misclass = excess_misclassification_error(lambda X: classify(net, X), self.dist, cfg.population_n, seed)
        gen = excess_generalization_error(lambda X: truncate(net(X)), self.dist, self.spec, cfg.population_n, seed)
        row = self._base_row(seed, m, coupling.N, coupling.truncated)
        row.update({
            "error": misclass.value, "se": misclass.se, "family": cfg.family, "raw_N": coupling.raw,
            "excess_gen": gen.value, "excess_gen_se": gen.se, "empirical_risk": result.empirical_risk,
            "certificate": result.constraint_certificate, "partial": partial,
        })
        return row

    def _covering_cell(self, m, epsilon):
        cfg = self.cfg
        c = HypothesisConstraints.from_c5(cfg.d, m, cfg.constants.C5)
        seed = cfg.seeds[0] + cfg.seed_offset
        estimate = covering_estimate(c, epsilon, cfg.constants.C5, seed=seed)
        row = self._base_row(seed, m)
        row.update({
            "error": estimate.empirical_log, "se": None, "epsilon": epsilon, "bound_log": estimate.bound_log,
            "dominated": estimate.dominated, "fitted_C5": fit_c5_for_dominance(c, epsilon, seed=seed,
                                                                               slack=COVERING_SLACK),
        })
        return row

    def _cell_args(self):
        if self.cfg.experiment == "covering_check":
            return list(COVERING_EPSILONS)
        return [seed + self.cfg.seed_offset for seed in self.cfg.seeds]

    def _cell(self, m, arg):
        experiment = self.cfg.experiment
        if experiment == "approx_rate":
            return self._approx_cell(m, arg)
        if experiment == "covering_check":
            return self._covering_cell(m, arg)
        return self._learn_cell(m, arg)

    def stream_cells(self):
        """Yield each finished cell, then a summary event per width, in grid order."""
        for m in self.cfg.m_grid:
            logger.info(f"{self.cfg.experiment}: starting width m={m}")
            rows = parallel_map(lambda arg: self._cell(m, arg), self._cell_args(), self.jobs)
            if self.cfg.experiment == "approx_rate":
                se = seed_spread_se([row["error"] for row in rows])
                for row in rows:
                    row["se"] = se
            for row in rows:
                self.rows.append(row)
                yield {"type": "cell", "row": row}
            errors = [row["error"] for row in rows if row["error"] is not None]
            median = float(np.median(errors)) if errors else math.nan
            yield {"type": "width", "m": m, "cells": len(rows), "median": median}

    # -- aggregation ---------------------------------------------------------------------

    def flush_partial(self):
        if not self.rows:
            return None
        logger.warning(f"Flushing {len(self.rows)} finished cells to {self.csv_path}")
        return reporting.write_results_csv(self.rows, self.csv_path, self.extra_columns)

    def run(self):
        os.makedirs(self.output_dir, exist_ok=True)
        logger.info(f"Running {self.cfg.experiment} (hash {self.config_hash[:12]}) into {self.output_dir}")
        try:
            for event in self.stream_cells():
                if event["type"] == "width":
                    logger.info(f"{self.cfg.experiment}: m={event['m']} done, {event['cells']} cells, "
                                f"median error {event['median']:.6g}")
            return self.finish()
        except Exception as e:
            logger.error(f"Experiment {self.cfg.experiment} failed: {str(e)}", exc_info=True)
            self.flush_partial()
            raise

    def finish(self):
        cfg = self.cfg
        reporting.write_results_csv(self.rows, self.csv_path, self.extra_columns)
        if cfg.experiment == "covering_check":
            report, fit, theoretical = self._covering_report(), None, None
        else:
            report, fit, theoretical = self._rate_report()
        report.update({
            "experiment": cfg.experiment,
            "config": cfg.to_dict(),
            "config_hash": self.config_hash,
            "size_key": self.size_key,
        })
        report["passed"] = all(a.passed for a in report["assertions"])
        reporting.plot_from_csv(self.csv_path, self.svg_path, self.size_key, fit, theoretical,
                                title=f"{cfg.experiment} (d={cfg.d}, p={cfg.p:g})")
        reporting.write_report(report, self.report_path)
        for assertion in report["assertions"]:
            level = logging.INFO if assertion.passed else logging.WARNING
            logger.log(level, f"{'PASS' if assertion.passed else 'FAIL'} {assertion.name}: {assertion.detail}")
        return ExperimentOutcome(cfg.experiment, report, self.rows, fit, self.csv_path, self.svg_path,
                                 self.report_path)

    def _rate_report(self):
        cfg = self.cfg
        medians = reporting.medians_by(self.rows, self.size_key)
        theoretical = self.theoretical_exponent()
        fit = None
        try:
            fit = fit_rate(medians)
        except FitFailureError as e:
            logger.error(f"Rate fit failed: {str(e)}")

        assertions = [slope_assertion(fit, theoretical)]
        allowed = 0 if cfg.experiment == "approx_rate" else 1
        inversions = count_inversions(medians)
        assertions.append(reporting.Assertion(
            "monotone", inversions <= allowed, f"{inversions} increases of the median, {allowed} allowed"))
        certified = all(row.get("certificate") for row in self.rows)
        assertions.append(reporting.Assertion(
            "certificate", certified, "every net satisfies its constraint class" if certified
            else "some net violates its constraint class"))
        if cfg.experiment == "learn_rate" and len(medians) >= 2:
            first, last = medians[0][1], medians[-1][1]
            drop = 1.0 - last / first if first > 0 else 0.0
            assertions.append(reporting.Assertion(
                "decrease", drop >= LEARN_DECREASE,
                f"median excess fell by {100 * drop:.1f}% from first to last width"))

        report = {
            "fit": fit.to_dict() if fit is not None else None,
            "theoretical_exponent": theoretical,
            "slope_target": SLOPE_FRACTION * theoretical,
            "medians": [list(p) for p in medians],
            "assertions": assertions,
        }
        if cfg.experiment == "approx_rate":
            consts = cfg.constants
            report["target"] = self.target.name
            report["constants"] = {
                "C5_formula": c5_formula(cfg.d, consts.C1, consts.C2),
                "C_formula": c_formula(cfg.d, consts.C1, consts.C2, consts.C3, consts.C4),
            }
        else:
            report["distribution"] = describe(self.dist)
            report["truncated_widths"] = sorted({row["m"] for row in self.rows if row["truncated"]})
            report["bounds"] = self._learning_bounds(theoretical)
        return report, fit, theoretical

    def _learning_bounds(self, theoretical):
        """C_6, C_7, C_8 at each coupled sample size, with the bound value they scale."""
        cfg = self.cfg
        bounds = []
        for m in cfg.m_grid:
            N = self._coupling(m).N
            constants = learning_bound_constants(N, cfg.delta, min(cfg.tau, 1.0), self.spec,
                                                 cfg.constants.C1, 1.0, cfg.constants.C0prime)
            rate = N ** theoretical
            entry = {"m": m, "N": N, "rate": rate}
            for name, value in constants.items():
                entry[name] = value
                entry[f"{name}_bound"] = value * rate
            bounds.append(entry)
        return bounds

    def _covering_report(self):
        cfg = self.cfg
        fitted = max(row["fitted_C5"] for row in self.rows)
        held = [row["error"] <= covering_bound(row["epsilon"], cfg.d, row["m"], fitted) + COVERING_SLACK + 1e-9
                for row in self.rows]
        configured = all(row["dominated"] for row in self.rows)
        return {
            "fitted_C5": fitted,
            "table": [{"m": row["m"], "epsilon": row["epsilon"], "empirical_log": row["error"],
                       "bound_log": row["bound_log"], "dominated": row["dominated"]} for row in self.rows],
            "assertions": [
                reporting.Assertion("dominance", configured,
                                    f"covering bound at C5={cfg.constants.C5:g} dominates every greedy net"
                                    if configured else "a greedy net exceeds the covering bound"),
                reporting.Assertion("dominance_fitted", all(held), f"fitted C5={fitted:.4g} holds on all cells"),
            ],
        }


def run_approx_rate(cfg, output_dir=None, jobs=None):
    if cfg.experiment != "approx_rate":
        raise PreconditionError(f"expected an approx_rate config, got {cfg.experiment}")
    return ExperimentRunner(cfg, output_dir, jobs).run()


def run_learn_rate(cfg, output_dir=None, jobs=None):
    if cfg.experiment != "learn_rate":
        raise PreconditionError(f"expected a learn_rate config, got {cfg.experiment}")
    return ExperimentRunner(cfg, output_dir, jobs).run()


def run_noise_rate(cfg, output_dir=None, jobs=None):
    if cfg.experiment != "noise_rate":
        raise PreconditionError(f"expected a noise_rate config, got {cfg.experiment}")
    return ExperimentRunner(cfg, output_dir, jobs).run()


def covering_check(cfg, output_dir=None, jobs=None):
    if cfg.experiment != "covering_check":
        raise PreconditionError(f"expected a covering_check config, got {cfg.experiment}")
    if cfg.d != 1 or max(cfg.m_grid) > 2:
        raise PreconditionError(f"the covering check runs at d=1, m <= 2, got d={cfg.d}, m_grid={cfg.m_grid}")
    return ExperimentRunner(cfg, output_dir, jobs).run()


def run_experiment(cfg, output_dir=None, jobs=None):
    """Dispatch on cfg.experiment."""
    if cfg.experiment == "inequality_suite":
        from inequality_suite import InequalitySuite
        return InequalitySuite(cfg, output_dir).run_and_write()
    runners = {
        "approx_rate": run_approx_rate,
        "learn_rate": run_learn_rate,
        "noise_rate": run_noise_rate,
        "covering_check": covering_check,
    }
    return runners[cfg.experiment](cfg, output_dir, jobs)
