"""η-norm loss, truncation, constrained ERM over H_m and the induced classifier."""
import csv
import logging
import math
from dataclasses import dataclass

import numpy as np

from config import TrainBudget
from errors import EmptyDataError, LabelError, PartialResultError, PreconditionError
from parallel import parallel_map
from rng import make_rng
from shallow_relu import ShallowNet, check_constraints, evaluate

logger = logging.getLogger(__name__)

REFRESH_FRACTION = 0.25


@dataclass(frozen=True)
class LossSpec:
    """φ(v) = (1 - v)_+^η; η = 1 is the hinge loss."""

    eta: float = 1.0

    def __post_init__(self):
        if self.eta < 1:
            raise PreconditionError(f"eta must be >= 1, got {self.eta}")


def loss(v, spec):
    return np.maximum(1.0 - np.asarray(v, dtype=float), 0.0) ** spec.eta


def loss_derivative(v, spec):
    """Subgradient of φ, taking 0 at the kink v = 1."""
    gap = np.maximum(1.0 - np.asarray(v, dtype=float), 0.0)
    if spec.eta == 1.0:
        return -(gap > 0).astype(float)
    return -spec.eta * gap ** (spec.eta - 1.0)


def loss_left_derivative_magnitude(spec):
    """|φ'_+(-1)| = η·2^{η-1}."""
    return spec.eta * 2.0 ** (spec.eta - 1.0)


def truncate(v):
    """Clip to [-1, 1]."""
    return np.clip(v, -1.0, 1.0)


def sign_label(values):
    """+1 where values >= 0, else -1."""
    return np.where(np.asarray(values, dtype=float) >= 0.0, 1, -1)


def classify(net, x):
    """sgn(f(x)) with sgn(0) = +1."""
    return sign_label(evaluate(net, x))


# -- data ----------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LabeledSample:
    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        y = np.asarray(self.y, dtype=float).reshape(-1)
        if len(y) == 0:
            raise EmptyDataError("labeled sample is empty")
        if len(X) != len(y):
            raise PreconditionError(f"{len(X)} points but {len(y)} labels")
        bad = ~np.isin(y, (-1.0, 1.0))
        if bad.any():
            raise LabelError(f"label {y[np.argmax(bad)]!r} at row {int(np.argmax(bad))} is not in {{-1, 1}}")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @classmethod
    def from_pairs(cls, pairs):
        pairs = list(pairs)
        if not pairs:
            raise EmptyDataError("labeled sample is empty")
        return cls(np.array([np.atleast_1d(x) for x, _ in pairs]), np.array([y for _, y in pairs]))

    @property
    def n(self):
        return len(self.y)

    @property
    def d(self):
        return self.X.shape[1]


def as_sample(data):
    if isinstance(data, LabeledSample):
        return data
    return LabeledSample.from_pairs(data)


def write_csv(sample, path):
    """Header x1..xd,y then one row per sample; floats via repr."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{j + 1}" for j in range(sample.d)] + ["y"])
        for x, y in zip(sample.X, sample.y):
            writer.writerow([repr(float(v)) for v in x] + [int(y)])


def read_csv(path):
    with open(path, "r", newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise EmptyDataError(f"{path} has no header row")
    header, body = rows[0], rows[1:]
    if not body:
        raise EmptyDataError(f"{path} has no samples")
    if header[-1].strip() != "y":
        raise PreconditionError(f"{path}: last column must be the label 'y', got {header[-1]!r}")
    X = np.array([[float(v) for v in row[:-1]] for row in body])
    y = np.array([float(row[-1]) for row in body])
    return LabeledSample(X, y)


def empirical_risk(net, data, spec):
    """(1/N) Σ φ(y_i f(x_i))."""
    sample = as_sample(data)
    return float(np.mean(loss(sample.y * evaluate(net, sample.X), spec)))


# -- ERM -------------------------------------------------------------------------

@dataclass(eq=False)
class ERMResult:
    f_z: ShallowNet
    empirical_risk: float
    restarts_used: int
    constraint_certificate: bool
    iterations_used: int = 0


def sample_atoms(rng, m, d):
    """α uniform on the ℓ1 sphere, pulled into the ball by U^{1/d}; b uniform on [0, 1]."""
    magnitudes = rng.exponential(size=(m, d))
    magnitudes /= magnitudes.sum(axis=1, keepdims=True)
    signs = np.where(rng.random((m, d)) < 0.5, -1.0, 1.0)
    radius = rng.random(m) ** (1.0 / d)
    return signs * magnitudes * radius[:, None], rng.random(m)


def _features(X, alpha, b):
    return np.maximum(X @ alpha.T - b, 0.0)


def _run_restart(sample, c, spec, budget, seed, restart, iterations):
    rng = make_rng(seed, "erm", restart)
    alpha, b = sample_atoms(rng, c.m, c.d)
    phi = _features(sample.X, alpha, b)
    beta = np.zeros(c.m)
    best = (float(np.mean(loss(np.zeros(sample.n), spec))), alpha.copy(), b.copy(), beta.copy())

    for t in range(1, iterations + 1):
        margins = sample.y * (phi @ beta)
        grad = phi.T @ (sample.y * loss_derivative(margins, spec)) / sample.n
        beta = np.clip(beta - budget.step / math.sqrt(t) * grad, -c.beta_cap, c.beta_cap)
        risk = float(np.mean(loss(sample.y * (phi @ beta), spec)))
        if risk < best[0]:
            best = (risk, alpha.copy(), b.copy(), beta.copy())
        if budget.refresh_every and t % budget.refresh_every == 0 and t < iterations:
            count = max(1, int(REFRESH_FRACTION * c.m))
            worst = np.argsort(np.abs(beta), kind="stable")[:count]
            alpha[worst], b[worst] = sample_atoms(rng, count, c.d)
            beta[worst] = 0.0
            phi[:, worst] = _features(sample.X, alpha[worst], b[worst])
        if t % 500 == 0:
            logger.debug(f"restart {restart}: iteration {t}, best risk {best[0]:.6f}")

    risk, alpha, b, beta = best
    return risk, ShallowNet(alpha, b, beta)


def erm_train(data, c, spec, budget=None, seed=0, jobs=1):
    """Multi-restart random-feature ERM with projected subgradient on β.

    Returns the restart with the smallest empirical risk, lowest index on ties.
    """
    sample = as_sample(data)
    budget = budget or TrainBudget()
    if c.m < 1:
        raise PreconditionError(f"width must be >= 1, got {c.m}")
    if sample.d != c.d:
        raise PreconditionError(f"data dimension {sample.d} does not match constraint dimension {c.d}")

    restarts = budget.restarts
    iterations = budget.iterations
    partial = False
    if budget.max_total_iterations is not None:
        affordable = budget.max_total_iterations // iterations
        if affordable == 0:
            partial = True
            restarts, iterations = 1, max(0, budget.max_total_iterations)
        else:
            restarts = min(restarts, affordable)

    logger.info(f"ERM: n={sample.n}, d={c.d}, m={c.m}, eta={spec.eta}, restarts={restarts}, iterations={iterations}")
    try:
        runs = parallel_map(
            lambda r: _run_restart(sample, c, spec, budget, seed, r, iterations), range(restarts), jobs)
    except Exception as e:
        logger.error(f"ERM training failed: {str(e)}", exc_info=True)
        raise

    winner = min(range(len(runs)), key=lambda r: (runs[r][0], r))
    net = runs[winner][1]
    result = ERMResult(net, empirical_risk(net, sample, spec), restarts,
                       check_constraints(net, c).ok, restarts * iterations)
    if partial:
        raise PartialResultError(
            f"budget of {budget.max_total_iterations} iterations is below one restart of {budget.iterations}",
            best=result)
    logger.info(f"ERM finished: best restart {winner}, empirical risk {result.empirical_risk:.6f}")
    return result
