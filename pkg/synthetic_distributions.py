"""Synthetic classification measures with known regression function and noise exponent.

Every family has a uniform marginal on D = [-1, 1]^d and is described by its
regression function f_ρ = 2η - 1, from which η, the Bayes rule, the Tsybakov
function and the conditional φ-risk minimizer follow.
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from classification_core import LabeledSample, write_csv
from errors import PreconditionError
from korobov_space import as_points
from rng import make_rng

logger = logging.getLogger(__name__)

FAMILIES = ("linear", "power", "hard_margin", "checkerboard", "constant")
MIN_PROBE = 10_000


@dataclass(frozen=True)
class Distribution:
    name: str
    d: int
    f_rho_fn: Callable
    theta: Optional[float] = None
    c_theta: Optional[float] = None
    params: dict = field(default_factory=dict)
    tsybakov_closed: Optional[Callable] = None
    bayes_risk_value: Optional[float] = None

    def f_rho(self, x):
        return self.f_rho_fn(as_points(x, self.d))

    def eta_fn(self, x):
        """ρ(y = 1 | x)."""
        return 0.5 * (1.0 + self.f_rho(x))

    def sample_x(self, rng, n):
        return rng.uniform(-1.0, 1.0, size=(n, self.d))

    def density(self, x):
        return np.full(len(as_points(x, self.d)), 2.0 ** -self.d)


def _linear(d):
    return Distribution("linear", d, lambda x: x[:, 0], 1.0, 1.0, {},
                        lambda r: min(max(r, 0.0), 1.0), 0.25)


def _power(d, theta=2.0):
    if theta <= 0:
        raise PreconditionError(f"power family needs theta > 0, got {theta}")
    return Distribution(
        "power", d, lambda x: np.sign(x[:, 0]) * np.abs(x[:, 0]) ** (1.0 / theta), float(theta), 1.0,
        {"theta": theta}, lambda r: min(max(r, 0.0), 1.0) ** theta, 1.0 / (2.0 * (theta + 1.0)))


def _hard_margin(d, margin=1.0):
    if not 0.0 < margin <= 1.0:
        raise PreconditionError(f"hard-margin family needs margin in (0, 1], got {margin}")
    return Distribution(
        "hard_margin", d, lambda x: np.where(x[:, 0] >= 0.0, margin, -margin), None, None,
        {"margin": margin}, lambda r: 1.0 if r >= margin else 0.0, (1.0 - margin) / 2.0)


def _checkerboard(d):
    if d != 2:
        raise PreconditionError(f"checkerboard family is two-dimensional, got d={d}")

    def f_rho(x):
        return np.sign(x[:, 0] * x[:, 1]) * np.minimum(np.abs(x[:, 0]), np.abs(x[:, 1]))

    return Distribution("checkerboard", 2, f_rho, 1.0, 0.5, {},
                        lambda r: 2.0 * min(r, 1.0) - min(r, 1.0) ** 2 if r > 0 else 0.0, 1.0 / 3.0)


def _constant(d, eta=0.5):
    if not 0.0 <= eta <= 1.0:
        raise PreconditionError(f"constant family needs eta in [0, 1], got {eta}")
    value = 2.0 * eta - 1.0
    return Distribution("constant", d, lambda x: np.full(len(x), value), None, None, {"eta": eta},
                        lambda r: 1.0 if 0.0 < abs(value) <= r else 0.0, min(eta, 1.0 - eta))


_BUILDERS = {
    "linear": _linear,
    "power": _power,
    "hard_margin": _hard_margin,
    "checkerboard": _checkerboard,
    "constant": _constant,
}


def make_distribution(name, d, **params):
    if name not in _BUILDERS:
        raise PreconditionError(f"unknown distribution family {name!r}; expected one of {FAMILIES}")
    if d < 1:
        raise PreconditionError(f"dimension must be >= 1, got {d}")
    return _BUILDERS[name](d, **params)


def sample(dist, n, seed):
    """n labelled points: x from the marginal, y = +1 with probability η(x)."""
    if n < 1:
        raise PreconditionError(f"sample size must be >= 1, got {n}")
    rng = make_rng(seed, "sample", dist.d)
    X = dist.sample_x(rng, n)
    y = np.where(rng.random(n) < dist.eta_fn(X), 1.0, -1.0)
    return LabeledSample(X, y)


def bayes_rule(dist, x):
    """+1 iff η(x) >= 1/2."""
    return np.where(dist.eta_fn(x) >= 0.5, 1, -1)


def bayes_risk(dist):
    """R(f_c) in closed form; None when the family carries none."""
    return dist.bayes_risk_value


def tsybakov_function(dist, r, probe=MIN_PROBE, seed=0, closed_form=True):
    """T(r) = ρ_X({x : 0 < |f_ρ(x)| <= r})."""
    if probe < MIN_PROBE:
        raise PreconditionError(f"Tsybakov function needs probe >= {MIN_PROBE}, got {probe}")
    if closed_form and dist.tsybakov_closed is not None:
        return float(dist.tsybakov_closed(r))
    rng = make_rng(seed, "probe", dist.d)
    margin = np.abs(dist.f_rho(dist.sample_x(rng, probe)))
    return float(np.mean((margin > 0.0) & (margin <= r)))


def conditional_phi_minimizer(eta_x, spec):
    """argmin_{v ∈ [-1, 1]} η_x·φ(v) + (1 - η_x)·φ(-v) for φ(v) = (1 - v)_+^η.

    Hinge (η = 1) gives the Bayes sign, 0 at η_x = 1/2. For η > 1 the stationary
    point solves ((1+v)/(1-v))^{η-1} = η_x/(1-η_x), i.e. v = tanh(log r / 2).
    """
    e = np.asarray(eta_x, dtype=float)
    if np.any((e < 0.0) | (e > 1.0)):
        raise PreconditionError("conditional probabilities must lie in [0, 1]")
    if spec.eta == 1.0:
        out = np.sign(2.0 * e - 1.0)
    else:
        with np.errstate(divide="ignore"):
            log_ratio = (np.log(e) - np.log1p(-e)) / (spec.eta - 1.0)
        out = np.where(e <= 0.0, -1.0, np.where(e >= 1.0, 1.0, np.tanh(np.nan_to_num(log_ratio) / 2.0)))
    return float(out) if out.ndim == 0 else out


def phi_risk_minimizer_values(dist, X, spec):
    """f_ρ^φ at the given points."""
    return conditional_phi_minimizer(dist.eta_fn(X), spec)


def write_dataset(dist, n, seed, path):
    data = sample(dist, n, seed)
    write_csv(data, path)
    logger.info(f"Wrote {n} samples of {dist.name} (d={dist.d}, seed={seed}) to {path}")
    return data


def declared_noise_holds(dist, radii=(0.1, 0.2, 0.4), slack=1.05):
    """T(c_θ·r) <= r^θ·slack at every radius, for families declaring (θ, c_θ)."""
    if dist.theta is None or dist.c_theta is None:
        return None
    return all(tsybakov_function(dist, dist.c_theta * r) <= r ** dist.theta * slack for r in radii)


def describe(dist):
    theta = "inf" if dist.theta is None else f"{dist.theta:g}"
    risk = "unknown" if dist.bayes_risk_value is None else f"{dist.bayes_risk_value:.6g}"
    return f"{dist.name}(d={dist.d}, theta={theta}, bayes_risk={risk}, params={dist.params})"
