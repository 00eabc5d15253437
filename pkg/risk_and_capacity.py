"""Risk functionals, comparison and variance checks, capacity bounds and the oracle inequality."""
import itertools
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import bisect
from scipy.spatial import cKDTree
from scipy.special import gamma

from classification_core import erm_train, loss, loss_left_derivative_magnitude, sign_label
from errors import InstanceTooLargeError, PreconditionError, UnsatisfiableBudgetError
from rng import make_rng
from synthetic_distributions import phi_risk_minimizer_values, sample

logger = logging.getLogger(__name__)

MIN_MC_POINTS = 1000
ZERO_EXCESS = 1e-12
EPS_SEARCH = (1e-12, 1e3)


@dataclass(frozen=True)
class Estimate:
    value: float
    se: float
    n: int

    @classmethod
    def from_values(cls, values):
        values = np.asarray(values, dtype=float)
        n = len(values)
        se = float(np.std(values, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        return cls(float(np.mean(values)), se, n)

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class RiskReport:
    misclass: Estimate
    excess_misclass: Estimate
    gen_error: Estimate
    excess_gen: Estimate
    method: str

    def to_json(self):
        return json.dumps({
            "misclass": self.misclass.to_dict(),
            "excess_misclass": self.excess_misclass.to_dict(),
            "gen_error": self.gen_error.to_dict(),
            "excess_gen": self.excess_gen.to_dict(),
            "method": self.method,
        }, sort_keys=True)


@dataclass(frozen=True)
class CoveringEstimate:
    epsilon: float
    bound_log: float
    empirical_log: Optional[float] = None

    @property
    def dominated(self):
        """The bound dominates the empirical net size, up to a log-slack of 0.5."""
        return self.empirical_log is None or self.empirical_log <= self.bound_log + 0.5

    def to_json(self):
        return json.dumps({"epsilon": self.epsilon, "bound_log": self.bound_log,
                           "empirical_log": self.empirical_log}, sort_keys=True)


def population(dist, n, seed):
    """Fresh marginal draws for Monte-Carlo integration."""
    if n < MIN_MC_POINTS:
        raise PreconditionError(f"Monte-Carlo estimates need n >= {MIN_MC_POINTS}, got {n}")
    return dist.sample_x(make_rng(seed, "population", dist.d), n)


def _conditional_error(labels, eta):
    """P(C(x) != y | x)."""
    return np.where(labels > 0, 1.0 - eta, eta)


def _conditional_phi_risk(values, eta, spec):
    """η·φ(f) + (1-η)·φ(-f), y integrated out."""
    return eta * loss(values, spec) + (1.0 - eta) * loss(-values, spec)


# -- risks ---------------------------------------------------------------------------

def misclassification_error(classifier, dist, n=100_000, seed=0):
    """R(C) = Prob{C(x) != y}."""
    X = population(dist, n, seed)
    return Estimate.from_values(_conditional_error(np.asarray(classifier(X)), dist.eta_fn(X)))


def excess_misclassification_error(classifier, dist, n=100_000, seed=0):
    """R(C) - R(f_c), paired on the same draws."""
    X = population(dist, n, seed)
    eta = dist.eta_fn(X)
    gap = _conditional_error(np.asarray(classifier(X)), eta) - np.minimum(eta, 1.0 - eta)
    return Estimate.from_values(gap)


def generalization_error(f, dist, spec, n=100_000, seed=0):
    """E^φ(f) = ∫ φ(y f(x)) dρ."""
    X = population(dist, n, seed)
    return Estimate.from_values(_conditional_phi_risk(np.asarray(f(X), dtype=float), dist.eta_fn(X), spec))


def excess_generalization_error(f, dist, spec, n=100_000, seed=0):
    """E^φ(f) - E^φ(f_ρ^φ), paired on the same draws."""
    X = population(dist, n, seed)
    eta = dist.eta_fn(X)
    best = phi_risk_minimizer_values(dist, X, spec)
    gap = (_conditional_phi_risk(np.asarray(f(X), dtype=float), eta, spec)
           - _conditional_phi_risk(best, eta, spec))
    return Estimate.from_values(gap)


def risk_report(f, dist, spec, n=100_000, seed=0):
    classifier = lambda X: sign_label(f(X))
    return RiskReport(
        misclassification_error(classifier, dist, n, seed),
        excess_misclassification_error(classifier, dist, n, seed),
        generalization_error(f, dist, spec, n, seed),
        excess_generalization_error(f, dist, spec, n, seed),
        f"monte_carlo(n={n}, seed={seed})",
    )


def comparison_bound(excess_gen, spec, tolerance=1e-9):
    """√(2·excess) for η > 1, the excess itself for the hinge loss."""
    if excess_gen < -tolerance:
        raise PreconditionError(f"excess generalization error must be >= 0, got {excess_gen}")
    excess_gen = max(excess_gen, 0.0)
    if spec.eta > 1:
        return math.sqrt(2.0 * excess_gen)
    return excess_gen


# -- variancing power ------------------------------------------------------------------

@dataclass
class VarianceCheck:
    holds: bool
    fitted_C1: float
    ratios: list = field(default_factory=list)
    excluded: list = field(default_factory=list)

    def __iter__(self):
        return iter((self.holds, self.fitted_C1))


def variance_power_check(f_set, dist, spec, tau, n=100_000, seed=0, B=2.0):
    """Ratios E[(φ(yf) - φ(yf_ρ^φ))²] / (E^φ(f) - E^φ(f_ρ^φ))^τ over f_set.

    Functions with vanishing excess are excluded and reported. The check holds
    when every ratio is finite and max/min < 10.
    """
    if not f_set:
        raise PreconditionError("variance check needs a nonempty function set")
    X = population(dist, n, seed)
    eta = dist.eta_fn(X)
    best = phi_risk_minimizer_values(dist, X, spec)
    best_pos, best_neg = loss(best, spec), loss(-best, spec)

    ratios, excluded = [], []
    for i, f in enumerate(f_set):
        values = np.asarray(f(X), dtype=float)
        if np.max(np.abs(values)) > B + 1e-12:
            raise PreconditionError(f"function {i} leaves [-{B}, {B}]")
        diff_pos = loss(values, spec) - best_pos
        diff_neg = loss(-values, spec) - best_neg
        excess = float(np.mean(eta * diff_pos + (1.0 - eta) * diff_neg))
        second = float(np.mean(eta * diff_pos ** 2 + (1.0 - eta) * diff_neg ** 2))
        if excess <= ZERO_EXCESS:
            logger.warning(f"Variance check: function {i} has excess {excess:.3e}; ratio undefined, excluded")
            excluded.append(i)
            continue
        ratios.append(second / excess ** tau)

    finite = bool(ratios) and all(math.isfinite(r) and r > 0 for r in ratios)
    holds = finite and max(ratios) / min(ratios) < 10.0
    fitted = max(ratios) if ratios else math.nan
    logger.info(f"Variance check tau={tau}: {len(ratios)} ratios, fitted C1={fitted:.4g}, holds={holds}")
    return VarianceCheck(holds, fitted, ratios, excluded)


# -- approximation error -------------------------------------------------------------------

def c0_prime(B, spec):
    """C'_0 = φ(-max{B, 1}) = (1 + max{B, 1})^η."""
    return (1.0 + max(B, 1.0)) ** spec.eta


def c_phi(spec):
    """C^φ = Γ(η + 1), η! for integer η."""
    return float(gamma(spec.eta + 1.0))


def approximation_error_bound(f, dist, spec, n=100_000, seed=0):
    """C^φ·‖f - f_ρ^φ‖^η_{L^η(ρ_X)}, an upper bound for E^φ(f) - E^φ(f_ρ^φ)."""
    X = population(dist, n, seed)
    gap = np.abs(np.asarray(f(X), dtype=float) - phi_risk_minimizer_values(dist, X, spec)) ** spec.eta
    est = Estimate.from_values(gap)
    scale = c_phi(spec)
    return Estimate(scale * est.value, scale * est.se, est.n)


def approximation_error_D(c, dist, spec, budget=None, seed=0, n=10_000, population_n=100_000,
                          witnesses=(), jobs=1):
    """Upper estimate of D(H_m) = inf_{f ∈ H_m} E^φ(f) - E^φ(f_ρ^φ).

    Trains on a fresh sample of size n and evaluates the excess on the
    population; any hand-built witness nets in H_m are also scored and the
    smallest excess is reported.
    """
    if c.m < 1:
        raise PreconditionError(f"D(H_m) needs m >= 1, got {c.m}")
    if n < 10_000:
        raise PreconditionError(f"D(H_m) estimation needs n >= 10^4 training points, got {n}")
    try:
        trained = erm_train(sample(dist, n, seed), c, spec, budget, seed, jobs).f_z
        candidates = [trained, *witnesses]
        scores = [excess_generalization_error(net, dist, spec, population_n, seed + 1) for net in candidates]
        best = min(range(len(scores)), key=lambda i: (scores[i].value, i))
        logger.info(f"D(H_m) estimate for m={c.m}: {scores[best].value:.6g} (candidate {best} of {len(scores)})")
        return scores[best]
    except Exception as e:
        logger.error(f"Approximation error estimate failed for m={c.m}: {str(e)}", exc_info=True)
        raise


# -- capacity ------------------------------------------------------------------------------

def _covering_log(epsilon, d, m, C5):
    scale = (d + 2) * m
    return scale * math.log(1.0 / epsilon) + scale * (
        math.log(1152.0 * math.e * math.pi ** 2 * C5) + (d + 2) / (10.0 * d))


def covering_bound(epsilon, d, m, C5):
    """log N(H_m, ε) <= (d+2)m·log(1/ε) + (d+2)m·(log(1152·e·π²·C_5) + (d+2)/(10d))."""
    if not 0.0 < epsilon <= 1.0:
        raise PreconditionError(f"epsilon must lie in (0, 1], got {epsilon}")
    if C5 <= 0:
        raise PreconditionError(f"C5 must be positive, got {C5}")
    return _covering_log(epsilon, d, m, C5)


def _parameter_grid(c, grid):
    alphas = np.linspace(-c.alpha_l1_cap, c.alpha_l1_cap, grid)
    biases = np.linspace(c.b_range[0], c.b_range[1], grid)
    betas = np.linspace(-c.beta_cap, c.beta_cap, grid)
    return list(itertools.product(alphas, biases, betas))


def empirical_covering(c, epsilon, grid=5, eval_points=64, seed=0):
    """log of a greedy sup-norm ε-net over a uniform parameter grid of H_m (d = 1, m <= 2)."""
    if c.d != 1 or c.m > 2:
        raise InstanceTooLargeError(f"empirical covering handles d=1, m<=2 only, got d={c.d}, m={c.m}")
    if epsilon <= 0:
        raise PreconditionError(f"epsilon must be positive, got {epsilon}")
    x = np.sort(make_rng(seed, "covering").uniform(-1.0, 1.0, eval_points))
    atoms = np.array([beta * np.maximum(alpha * x - b, 0.0) for alpha, b, beta in _parameter_grid(c, grid)])
    if c.m == 1:
        functions = atoms
    else:
        pairs = np.array(list(itertools.combinations_with_replacement(range(len(atoms)), 2)))
        functions = atoms[pairs[:, 0]] + atoms[pairs[:, 1]]

    tree = cKDTree(functions)
    covered = np.zeros(len(functions), dtype=bool)
    centers = 0
    for i in range(len(functions)):
        if covered[i]:
            continue
        centers += 1
        covered[tree.query_ball_point(functions[i], r=epsilon, p=np.inf)] = True
    logger.debug(f"Greedy {epsilon}-net over {len(functions)} functions: {centers} centers")
    return math.log(centers)


def covering_estimate(c, epsilon, C5, grid=5, eval_points=64, seed=0):
    empirical = empirical_covering(c, epsilon, grid, eval_points, seed) if c.d == 1 and c.m <= 2 else None
    return CoveringEstimate(epsilon, covering_bound(epsilon, c.d, c.m, C5), empirical)


def fit_c5_for_dominance(c, epsilon, grid=5, eval_points=64, seed=0, slack=0.5):
    """Smallest C_5 with empirical_log <= covering_bound + slack (at least a tiny positive value)."""
    empirical = empirical_covering(c, epsilon, grid, eval_points, seed)
    base = _covering_log(epsilon, c.d, c.m, 1.0)
    needed = (empirical - slack - base) / ((c.d + 2) * c.m)
    return max(math.exp(needed), 1e-300)


# -- oracle inequality ---------------------------------------------------------------------

def oracle_inequality_bound(D_val, N, delta, tau, C1, C0prime, eps_star):
    """4D + 8C'_0·log(2/δ)/(3N) + 2(8C_1·log(2/δ)/N)^{1/(2-τ)} + 24ε*."""
    if not 0.0 < delta <= 1.0:
        raise PreconditionError(f"delta must lie in (0, 1], got {delta}")
    if N < 1:
        raise PreconditionError(f"N must be >= 1, got {N}")
    log_term = math.log(2.0 / delta)
    return (4.0 * D_val + 8.0 * C0prime * log_term / (3.0 * N)
            + 2.0 * (8.0 * C1 * log_term / N) ** (1.0 / (2.0 - tau)) + 24.0 * eps_star)


def epsilon_star_gap(epsilon, d, m, N, delta, tau, C1, spec, C5):
    """Left side minus log(δ/2) of the defining inequality; negative means satisfied."""
    capacity = _covering_log(epsilon / loss_left_derivative_magnitude(spec), d, m, C5)
    concentration = N * epsilon ** (2.0 - tau) / (
        2.0 * C1 + (4.0 / 3.0) * 2.0 ** spec.eta * epsilon ** (1.0 - tau))
    return capacity - concentration - math.log(delta / 2.0)


def epsilon_star_solve(d, m, N, delta, tau, C1, spec, C5):
    """Smallest ε satisfying the capacity condition, by bisection in log ε."""
    if min(d, m, N, C1, C5) <= 0:
        raise PreconditionError("epsilon_star_solve needs positive d, m, N, C1, C5")
    if not 0.0 < delta < 1.0:
        raise PreconditionError(f"delta must lie in (0, 1), got {delta}")
    if not 0.0 <= tau <= 1.0:
        raise PreconditionError(f"variancing power must lie in [0, 1], got {tau}")
    gap = lambda s: epsilon_star_gap(math.exp(s), d, m, N, delta, tau, C1, spec, C5)
    low, high = (math.log(v) for v in EPS_SEARCH)
    if gap(high) > 0:
        raise UnsatisfiableBudgetError(f"no epsilon below {EPS_SEARCH[1]:g} satisfies the condition (N={N}, m={m})")
    if gap(low) <= 0:
        return EPS_SEARCH[0]
    return math.exp(bisect(gap, low, high, xtol=1e-11, rtol=4 * np.finfo(float).eps, maxiter=500))


# -- learning-rate constants ---------------------------------------------------------------

def learning_bound_constants(N, delta, tau, spec, C1=1.0, B=1.0, C0prime=None):
    """C_6 (η > 1), C_7 (hinge) and C_8 (2-norm loss under noise) as functions of N and δ."""
    cphi = c_phi(spec)
    c0p = c0_prime(B, spec) if C0prime is None else C0prime
    a = max(loss_left_derivative_magnitude(spec), C1)
    log_factor = max(math.log(N), math.log(2.0 * N / delta)) * math.log(2.0 / delta)
    tail = 2.0 * (8.0 * C1) ** (1.0 / (2.0 - tau))
    return {
        "C6": math.sqrt((8.0 * cphi + 24.0 * a + 3.0 * c0p + tail) * log_factor),
        "C7": (4.0 * cphi + 24.0 * a + 3.0 * c0p + tail) * log_factor,
        "C8": math.sqrt((8.0 * cphi + 24.0 * max(4.0, C1) + 3.0 * c0p + 16.0 * C1) * log_factor),
    }


def _correction(d, p):
    return 0.0 if p >= 2 else (2.0 / p - 1.0) * d * d


def learning_rate_exponent(d, p, eta, tau):
    """Exponent of N in the excess misclassification bound."""
    return -2.0 * eta * (d + 2.0) / ((2.0 - tau) * (2.0 * eta * (d + 2.0) + 5.0 * d + _correction(d, p)))


def noise_rate_exponent(d, p, theta):
    """Exponent of N under the Tsybakov condition; θ=None is the noiseless limit."""
    if theta is None or math.isinf(theta):
        return -(4.0 * d + 8.0) / (9.0 * d + 8.0 + _correction(d, p))
    return -theta * (4.0 * d + 8.0) / ((2.0 + theta) * (9.0 * d + 8.0 + _correction(d, p)))
