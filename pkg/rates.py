"""Log-log rate fits and the width/sample-size couplings of the learning experiments."""
import logging
import math
from dataclasses import dataclass

import numpy as np

from errors import FitFailureError, PreconditionError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RateFit:
    points: tuple
    slope: float
    intercept: float
    r_squared: float

    def to_dict(self):
        return {"points": [list(p) for p in self.points], "slope": self.slope,
                "intercept": self.intercept, "r_squared": self.r_squared}


def fit_rate(points):
    """OLS of log(error) on log(size); non-positive errors are dropped with a warning."""
    kept = []
    for size, error in points:
        if size <= 0 or not error > 0 or not math.isfinite(error):
            logger.warning(f"Dropping rate point (size={size}, error={error}): needs positive values")
            continue
        kept.append((math.log(size), math.log(error)))
    if len(kept) < 3:
        raise FitFailureError(f"rate fit needs at least 3 usable points, got {len(kept)}")

    x = np.array([p[0] for p in kept])
    y = np.array([p[1] for p in kept])
    design = np.column_stack([x, np.ones_like(x)])
    (slope, intercept), *_ = np.linalg.lstsq(design, y, rcond=None)
    residual = y - (slope * x + intercept)
    total = float(np.sum((y - y.mean()) ** 2))
    r_squared = 1.0 if total == 0.0 else max(0.0, min(1.0, 1.0 - float(np.sum(residual ** 2)) / total))
    return RateFit(tuple(kept), float(slope), float(intercept), r_squared)


@dataclass(frozen=True)
class Coupling:
    """Sample size N for width m, truncated at n_max when the exponent overshoots."""

    m: int
    N: int
    raw: float
    truncated: bool


def _couple(m, exponent, n_max, label):
    if m < 1:
        raise PreconditionError(f"width must be >= 1, got {m}")
    raw = m ** exponent
    N = max(1, int(math.floor(raw * (1.0 + 1e-12))))
    if N > n_max:
        logger.warning(f"{label} coupling for m={m} asks for N={raw:.4g}; truncated at N_max={n_max}")
        return Coupling(m, int(n_max), raw, True)
    return Coupling(m, N, raw, False)


def _correction(d, p):
    return 0.0 if p >= 2 else (2.0 / p - 1.0) * d * d


def learning_coupling_exponent(d, p, eta, tau):
    """N = m^{(2-τ)(2η(d+2)+5d+c)/(5d+c)}, c = 0 for p >= 2 else (2/p-1)d²."""
    c = _correction(d, p)
    return (2.0 - tau) * (2.0 * eta * (d + 2.0) + 5.0 * d + c) / (5.0 * d + c)


def noise_coupling_exponent(d, p):
    """N = m^{(9d+8+c)/(5d+c)}."""
    c = _correction(d, p)
    return (9.0 * d + 8.0 + c) / (5.0 * d + c)


def sample_size_coupling(m, d, p, eta, tau, n_max=200_000):
    return _couple(m, learning_coupling_exponent(d, p, eta, tau), n_max, "learning")


def noise_sample_size(m, d, p, n_max=200_000):
    return _couple(m, noise_coupling_exponent(d, p), n_max, "noise")
