"""Numerical checks of the inequalities the approximation and learning bounds are built from."""
import logging
import math
import os
from dataclasses import asdict, dataclass, field

import numpy as np

from classification_core import LossSpec, sample_atoms, sign_label, truncate
from experiments import ExperimentOutcome
from korobov_space import PeriodicFunction, korobov_norm, make_test_function, periodic_extension
from periodic_fourier import (JacksonSpec, analyze, default_analysis_grid, jackson_apply, jackson_sup_error,
                              kernel_norms, t_l_apply, v_weight, young_bound)
from quadrature import QuadratureSpec
import reporting
from risk_and_capacity import (comparison_bound, epsilon_star_gap, epsilon_star_solve,
                               excess_generalization_error, excess_misclassification_error,
                               variance_power_check)
from rng import make_rng
from shallow_relu import ShallowNet
from synthetic_distributions import declared_noise_holds, make_distribution, phi_risk_minimizer_values

logger = logging.getLogger(__name__)

JACKSON_DEGREES = (8, 16, 32, 64)
JACKSON_RATIO_BAND = (3.4, 4.6)
PARSEVAL_TOLERANCE = 1e-8
V_SHADOW_SLACK = 1.5
SE_SLACK = 3.0
YOUNG_EXPONENTS = (1.0, 1.5, 2.0, math.inf)
SUITE_COLUMNS = ("check", "case", "value", "limit", "passed")


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""
    cases: list = field(default_factory=list)

    def to_dict(self):
        return asdict(self)


def _case(case, value, limit, passed, **extra):
    return {"case": case, "value": value, "limit": limit, "passed": bool(passed), **extra}


def cosine_on_torus():
    """f(t) = cos t on T¹."""
    return PeriodicFunction(1, lambda t: np.cos(t[:, 0]), lambda t: -np.cos(t[:, 0]))


class InequalitySuite:
    """Runs every check and reports {"success": ..., "checks": [...]}.

    A check that raises is reported as failed with its error message; the
    remaining checks still run.
    """

    def __init__(self, cfg=None, output_dir=None, quad=None, comparison_nets=1000, variance_nets=50,
                 population_n=20_000, oracle_tuples=20, seed=0):
        self.cfg = cfg
        self.output_dir = output_dir or (cfg.output_dir if cfg is not None else "results")
        self.quad = quad or QuadratureSpec(points_per_axis=32, sup_points=64)
        self.comparison_nets = comparison_nets
        self.variance_nets = variance_nets
        self.population_n = population_n
        self.oracle_tuples = oracle_tuples
        self.seed = seed + (cfg.seed_offset if cfg is not None else 0)

    @property
    def checks(self):
        return [
            ("jackson_ratios", self.check_jackson_ratios),
            ("parseval", self.check_parseval),
            ("kernel_l1", self.check_kernel_l1),
            ("young", self.check_young),
            ("v_shadow", self.check_v_shadow),
            ("comparison", self.check_comparison),
            ("variancing_power", self.check_variancing_power),
            ("tsybakov", self.check_tsybakov),
            ("epsilon_star", self.check_epsilon_star),
        ]

    def run(self, only=None):
        results = []
        for name, check in self.checks:
            if only is not None and name not in only:
                continue
            logger.info(f"Inequality suite: running {name}")
            try:
                result = check()
            except Exception as e:
                logger.error(f"Check {name} raised: {str(e)}", exc_info=True)
                result = Check(name, False, f"error: {str(e)}")
            level = logging.INFO if result.passed else logging.WARNING
            logger.log(level, f"{'PASS' if result.passed else 'FAIL'} {name}: {result.detail}")
            results.append(result)
        return {"success": all(r.passed for r in results), "checks": [r.to_dict() for r in results]}

    # -- approximation side ---------------------------------------------------------

    def check_jackson_ratios(self):
        targets = {"cos": cosine_on_torus(),
                   "random_trig": periodic_extension(make_test_function("random_trig", 1, self.seed))}
        low, high = JACKSON_RATIO_BAND
        cases = []
        for label, f in targets.items():
            errors = [jackson_sup_error(f, JacksonSpec.from_degree(N)) for N in JACKSON_DEGREES]
            for N, error in zip(JACKSON_DEGREES, errors):
                cases.append(_case(f"{label} error N={N}", error, None, True, N=N, error=error))
            for N, coarse, fine in zip(JACKSON_DEGREES, errors, errors[1:]):
                ratio = coarse / fine if fine > 0 else math.inf
                cases.append(_case(f"{label} ratio N={N}", ratio, [low, high], low <= ratio <= high))
        passed = all(c["passed"] for c in cases)
        return Check("jackson_ratios", passed, f"error(N)/error(2N) within [{low}, {high}]", cases)

    def check_parseval(self):
        cases = []
        for d in (1, 2):
            f = periodic_extension(make_test_function("random_trig", d, self.seed))
            for L in (2, 3):
                spec = JacksonSpec.from_degree(2 ** L)
                coeffs = analyze(f, spec.support, default_analysis_grid(spec.support))
                smoothed = t_l_apply(coeffs, spec)
                values = smoothed.synthesize_grid(4 * spec.support + 4)
                by_sum = smoothed.l2_norm() ** 2
                by_quadrature = float(np.mean(values ** 2))
                rel = abs(by_sum - by_quadrature) / max(by_sum, 1e-300)
                cases.append(_case(f"d={d} L={L}", rel, PARSEVAL_TOLERANCE, rel <= PARSEVAL_TOLERANCE))
        return Check("parseval", all(c["passed"] for c in cases),
                     "coefficient sum matches quadrature of |T_L f|^2", cases)

    def check_kernel_l1(self):
        cases = []
        for d in (1, 2):
            for L in (2, 3, 4):
                l1, _ = kernel_norms(JacksonSpec.from_degree(2 ** L), d)
                cases.append(_case(f"d={d} L={L}", l1, 4.0 ** d, l1 <= 4.0 ** d))
        return Check("kernel_l1", all(c["passed"] for c in cases), "||G||_1 <= 4^d", cases)

    def check_young(self):
        cases = []
        spec = JacksonSpec.from_degree(8)
        for family in ("sine_product", "polynomial_bump", "random_trig"):
            for d in (1, 2):
                F = make_test_function(family, d, self.seed)
                for p in YOUNG_EXPONENTS:
                    result = young_bound(F, spec, p, self.quad)
                    cases.append(_case(f"{family} d={d} p={p:g}", result["lhs"], result["rhs"], result["holds"]))
        return Check("young", all(c["passed"] for c in cases), "||T_L f||_2 <= (2pi)^-d ||f''||_p ||G||_q", cases)

    def check_v_shadow(self):
        cases = []
        for d in (1, 2):
            F = make_test_function("sine_product", d)
            f = periodic_extension(F)
            norm = korobov_norm(F, 2.0, self.quad)
            v = {}
            for N in (8, 16, 32):
                spec = JacksonSpec.from_degree(N)
                v[N] = v_weight(jackson_apply(f, spec))
            fitted = v[8] / (norm * math.sqrt(8))
            for N in (16, 32):
                limit = V_SHADOW_SLACK * fitted * norm * math.sqrt(N)
                cases.append(_case(f"d={d} N={N}", v[N], limit, v[N] <= limit, fitted_C=fitted))
        return Check("v_shadow", all(c["passed"] for c in cases), "v <= 1.5·C·||F||·N^(1/2) with C fitted at N=8",
                     cases)

    # -- learning side -------------------------------------------------------------------

    def _random_nets(self, rng, count, d, m=4):
        nets = []
        for _ in range(count):
            alpha, b = sample_atoms(rng, m, d)
            nets.append(ShallowNet(alpha, b, rng.normal(0.0, 2.0, m), rng.uniform(-0.5, 0.5)))
        return nets

    def check_comparison(self):
        cases = []
        for eta in (1.0, 2.0):
            spec = LossSpec(eta)
            for family, params in (("linear", {}), ("power", {"theta": 2.0}), ("hard_margin", {"margin": 0.5})):
                dist = make_distribution(family, 1, **params)
                rng = make_rng(self.seed, "suite", int(eta))
                violations = 0
                worst = -math.inf
                for i, net in enumerate(self._random_nets(rng, self.comparison_nets, dist.d)):
                    clipped = lambda X, net=net: truncate(net(X))
                    misclass = excess_misclassification_error(lambda X: sign_label(clipped(X)), dist,
                                                              self.population_n, self.seed + i)
                    gen = excess_generalization_error(clipped, dist, spec, self.population_n, self.seed + i)
                    bound = comparison_bound(max(gen.value + SE_SLACK * gen.se, 0.0), spec)
                    gap = misclass.value - SE_SLACK * misclass.se - bound
                    worst = max(worst, gap)
                    violations += gap > 0
                cases.append(_case(f"{family} eta={eta:g}", violations, 0, violations == 0, worst_gap=worst))
        return Check("comparison", all(c["passed"] for c in cases),
                     "excess misclassification <= comparison bound of the excess phi-risk", cases)

    def _perturbations(self, dist, spec, rng):
        """f_ρ^φ plus ε-scaled single atoms, truncated; ε log-spaced over [1e-3, 0.5]."""
        functions = []
        for eps in np.logspace(-3.0, math.log10(0.5), self.variance_nets):
            alpha = np.where(rng.random((1, dist.d)) < 0.5, -1.0, 1.0) / dist.d
            atom = ShallowNet(alpha, [0.5 * rng.random()], [1.0])
            functions.append(lambda X, atom=atom, eps=eps: truncate(
                phi_risk_minimizer_values(dist, X, spec) + eps * atom(X)))
        return functions

    def check_variancing_power(self):
        spec = LossSpec(2.0)
        cases = []
        for family, params in (("linear", {}), ("power", {"theta": 2.0})):
            dist = make_distribution(family, 1, **params)
            functions = self._perturbations(dist, spec, make_rng(self.seed, "suite", 2))
            holds = variance_power_check(functions, dist, spec, 1.0, self.population_n, self.seed)
            control = variance_power_check(functions, dist, spec, 1.5, self.population_n, self.seed)
            cases.append(_case(f"{family} tau=1", holds.fitted_C1, None, holds.holds))
            cases.append(_case(f"{family} tau=1.5 control", control.fitted_C1, None, not control.holds))
        return Check("variancing_power", all(c["passed"] for c in cases),
                     "tau=1 holds for the 2-norm loss and tau=1.5 does not", cases)

    def check_tsybakov(self):
        cases = []
        for family, d, params in (("linear", 1, {}), ("power", 1, {"theta": 2.0}), ("power", 1, {"theta": 0.5}),
                                  ("checkerboard", 2, {})):
            dist = make_distribution(family, d, **params)
            holds = declared_noise_holds(dist)
            cases.append(_case(f"{family} {params}", dist.theta, dist.c_theta, bool(holds)))
        return Check("tsybakov", all(c["passed"] for c in cases), "T(c_theta r) <= 1.05 r^theta", cases)

    def check_epsilon_star(self):
        rng = make_rng(self.seed, "suite", 9)
        cases = []
        for i in range(self.oracle_tuples):
            d = int(rng.integers(1, 4))
            m = int(rng.integers(1, 65))
            N = int(10 ** rng.uniform(2.0, 5.0))
            delta = float(rng.uniform(0.01, 0.5))
            tau = float(rng.uniform(0.0, 1.0))
            C1 = float(rng.uniform(0.5, 2.0))
            spec = LossSpec(float(rng.choice([1.0, 2.0])))
            eps = epsilon_star_solve(d, m, N, delta, tau, C1, spec, 1.0)
            oracle = self._grid_oracle(d, m, N, delta, tau, C1, spec)
            agree = abs(eps - oracle) <= 1e-6 * oracle
            bigger_N = epsilon_star_solve(d, m, 2 * N, delta, tau, C1, spec, 1.0)
            bigger_m = epsilon_star_solve(d, m + 1, N, delta, tau, C1, spec, 1.0)
            monotone = bigger_N <= eps * (1 + 1e-9) and bigger_m >= eps * (1 - 1e-9)
            cases.append(_case(f"tuple {i}", eps, oracle, agree and monotone, N=N, m=m, d=d))
        return Check("epsilon_star", all(c["passed"] for c in cases),
                     "bisection matches a dense grid and is monotone in N and m", cases)

    @staticmethod
    def _grid_oracle(d, m, N, delta, tau, C1, spec, points=4001):
        """First grid point of a log-spaced scan that satisfies the condition, refined by halving."""
        grid = np.logspace(-12.0, 3.0, points)
        gaps = np.array([epsilon_star_gap(e, d, m, N, delta, tau, C1, spec, 1.0) for e in grid])
        first = int(np.argmax(gaps <= 0))
        if first == 0:
            return float(grid[0])
        low, high = float(grid[first - 1]), float(grid[first])
        while high - low > 1e-9 * high:
            mid = math.sqrt(low * high)
            if epsilon_star_gap(mid, d, m, N, delta, tau, C1, spec, 1.0) <= 0:
                high = mid
            else:
                low = mid
        return high

    # -- output ------------------------------------------------------------------------------

    def rows(self, result):
        config_hash = self.cfg.config_hash() if self.cfg is not None else ""
        rows = []
        for check in result["checks"]:
            for case in check["cases"] or [_case("", None, None, check["passed"])]:
                value = case["value"]
                rows.append({
                    "experiment": "inequality_suite", "config_hash": config_hash, "seed": self.seed,
                    "check": check["name"], "case": case["case"],
                    "value": value if not isinstance(value, list) else None,
                    "limit": case["limit"] if not isinstance(case["limit"], list) else "/".join(
                        repr(float(x)) for x in case["limit"]),
                    "passed": case["passed"], "N": case.get("N"), "error": case.get("error"),
                })
        return rows

    def run_and_write(self):
        os.makedirs(self.output_dir, exist_ok=True)
        result = self.run()
        rows = self.rows(result)
        csv_path = os.path.join(self.output_dir, reporting.CSV_NAME)
        svg_path = os.path.join(self.output_dir, reporting.SVG_NAME)
        report_path = os.path.join(self.output_dir, reporting.REPORT_NAME)
        reporting.write_results_csv(rows, csv_path, SUITE_COLUMNS)
        reporting.plot_from_csv(csv_path, svg_path, "N", theoretical=-2.0, title="Jackson sup error")
        assertions = [reporting.Assertion(c["name"], c["passed"], c["detail"]) for c in result["checks"]]
        report = {
            "experiment": "inequality_suite",
            "config": self.cfg.to_dict() if self.cfg is not None else None,
            "config_hash": self.cfg.config_hash() if self.cfg is not None else None,
            "checks": result["checks"],
            "assertions": assertions,
            "passed": result["success"],
        }
        reporting.write_report(report, report_path)
        return ExperimentOutcome("inequality_suite", report, rows, None, csv_path, svg_path, report_path)
