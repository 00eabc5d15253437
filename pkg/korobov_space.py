"""Korobov-space test functions X^{2,p}(D), their norms and torus extensions."""
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.special import betaln, gammaln

from errors import DimensionMismatchError, PreconditionError
from quadrature import QuadratureSpec, lp_norm
from rng import make_rng

logger = logging.getLogger(__name__)

FAMILIES = ("sine_product", "polynomial_bump", "random_trig")
BOUNDARY_TOLERANCE = 1e-10


def as_points(x, d):
    """Coerce a point or a batch of points to an ``(n, d)`` float array."""
    pts = np.asarray(x, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(1, -1) if d > 1 or pts.size == 1 else pts.reshape(-1, 1)
    if pts.ndim != 2 or pts.shape[1] != d:
        raise DimensionMismatchError(f"expected points of dimension {d}, got shape {np.shape(x)}")
    return pts


@dataclass(frozen=True)
class KorobovFunction:
    """A function on D vanishing on the boundary, with its mixed derivative."""

    dim: int
    eval: Callable
    mixed_deriv: Callable
    analytic_norm: Optional[Callable] = None
    name: str = "custom"
    terms: tuple = field(default=(), compare=False)

    def __call__(self, x):
        return self.eval(as_points(x, self.dim))

    def norm_if_known(self, p):
        if self.analytic_norm is None:
            return None
        return self.analytic_norm(p)

    def scaled(self, c):
        known = None
        if self.analytic_norm is not None:
            base = self.analytic_norm

            def known(p):
                value = base(p)
                return None if value is None else abs(c) * value

        terms = tuple((c * coef, freqs) for coef, freqs in self.terms)
        return KorobovFunction(
            self.dim,
            lambda x: c * self.eval(x),
            lambda x: c * self.mixed_deriv(x),
            known,
            f"{c:g}*{self.name}",
            terms,
        )

    def __add__(self, other):
        if other.dim != self.dim:
            raise DimensionMismatchError(f"cannot add functions of dimension {self.dim} and {other.dim}")
        return KorobovFunction(
            self.dim,
            lambda x: self.eval(x) + other.eval(x),
            lambda x: self.mixed_deriv(x) + other.mixed_deriv(x),
            None,
            f"({self.name}+{other.name})",
        )


@dataclass(frozen=True)
class PeriodicFunction:
    """The 2π-periodic extension f(t) = F(t/π) on the torus T^d = [-π, π)^d."""

    dim: int
    eval: Callable
    mixed_deriv: Callable
    source: Optional[KorobovFunction] = None

    def __call__(self, t):
        return self.eval(as_points(t, self.dim))


# -- built-in families -------------------------------------------------------

def _sine_terms_eval(terms, d):
    def evaluate(x):
        out = np.zeros(len(x))
        for coef, freqs in terms:
            out += coef * np.prod(np.sin(np.pi * np.asarray(freqs) * x), axis=1)
        return out

    def derivative(x):
        out = np.zeros(len(x))
        for coef, freqs in terms:
            n = np.asarray(freqs, dtype=float)
            factor = coef * (-(np.pi ** 2)) ** d * float(np.prod(n ** 2))
            out += factor * np.prod(np.sin(np.pi * n * x), axis=1)
        return out

    return evaluate, derivative


def _abs_sine_power_integral(p):
    """∫_{-1}^{1} |sin(πx)|^p dx."""
    return 2.0 * math.exp(gammaln((p + 1) / 2) - gammaln(p / 2 + 1)) / math.sqrt(math.pi)


def _sine_product(d):
    evaluate, derivative = _sine_terms_eval(((1.0, (1,) * d),), d)

    def known(p):
        if math.isinf(p):
            return np.pi ** (2 * d) + 1.0
        return (np.pi ** (2 * d) + 1.0) * _abs_sine_power_integral(p) ** (d / p)

    return KorobovFunction(d, evaluate, derivative, known, "sine_product", ((1.0, (1,) * d),))


def _polynomial_bump(d):
    def evaluate(x):
        return np.prod((1.0 - x ** 2) ** 2, axis=1)

    def derivative(x):
        return np.prod(12.0 * x ** 2 - 4.0, axis=1)

    # ||12x^2 - 4||_p on [-1, 1] in closed form where it is elementary
    second = {1.0: 32.0 / (3.0 * math.sqrt(3.0)), 2.0: math.sqrt(25.6), math.inf: 8.0}

    def known(p):
        p = float(p)
        if p not in second:
            return None
        if math.isinf(p):
            bump = 1.0
        else:
            bump = math.exp(betaln(0.5, 2 * p + 1) / p)
        return second[p] ** d + bump ** d

    return KorobovFunction(d, evaluate, derivative, known, "polynomial_bump")


def _random_trig(d, seed, extra_terms=2):
    rng = make_rng(seed, "random_trig", d)
    merged = {(1,) * d: 1.0}
    for _ in range(extra_terms):
        freqs = tuple(int(n) for n in rng.integers(1, 3, size=d))
        coef = float(rng.uniform(-0.5, 0.5)) * float(np.prod(np.asarray(freqs, dtype=float) ** -4))
        merged[freqs] = merged.get(freqs, 0.0) + coef
    terms = tuple((merged[k], k) for k in sorted(merged))
    evaluate, derivative = _sine_terms_eval(terms, d)

    def known(p):
        # sin(nπx) are orthonormal on [-1, 1], so only p = 2 is exact
        if float(p) != 2.0:
            return None
        plain = math.sqrt(sum(c * c for c, _ in terms))
        mixed = math.sqrt(sum((c * np.pi ** (2 * d) * float(np.prod(np.asarray(n) ** 2.0))) ** 2
                              for c, n in terms))
        return plain + mixed

    return KorobovFunction(d, evaluate, derivative, known, "random_trig", terms)


def make_test_function(family, d, seed=0):
    """Build a boundary-vanishing test function of the named family."""
    if d < 1:
        raise PreconditionError(f"dimension must be >= 1, got {d}")
    if family == "sine_product":
        return _sine_product(d)
    if family == "polynomial_bump":
        return _polynomial_bump(d)
    if family == "random_trig":
        return _random_trig(d, seed)
    raise PreconditionError(f"unknown test-function family {family!r}; expected one of {FAMILIES}")


def zero_function(d):
    return KorobovFunction(d, lambda x: np.zeros(len(x)), lambda x: np.zeros(len(x)),
                           lambda p: 0.0, "zero")


# -- operations ----------------------------------------------------------------

def lp_norm_parts(F, p, quad):
    """(||∂^{2d}F||_p, ||F||_p) on D."""
    return lp_norm(F.mixed_deriv, F.dim, p, quad), lp_norm(F.eval, F.dim, p, quad)


def korobov_norm(F, p, quad=None):
    """||F||_{X^{2,p}(D)} = ||∂^{2d}F||_{L_p(D)} + ||F||_{L_p(D)}, computed numerically."""
    quad = quad or QuadratureSpec()
    if p < 1:
        raise PreconditionError(f"Korobov norm needs p >= 1, got {p}")
    mixed, plain = lp_norm_parts(F, p, quad)
    return mixed + plain


def boundary_residual(F, samples=64, seed=0):
    """Largest |F| over random points on every face of D."""
    rng = make_rng(seed, "probe", F.dim)
    worst = 0.0
    for axis in range(F.dim):
        for side in (-1.0, 1.0):
            pts = rng.uniform(-1.0, 1.0, size=(samples, F.dim))
            pts[:, axis] = side
            worst = max(worst, float(np.max(np.abs(F.eval(pts)))))
    return worst


def wrap_to_torus(t):
    """Map angles to the fundamental domain [-π, π)."""
    return np.mod(t + np.pi, 2.0 * np.pi) - np.pi


def periodic_extension(F, samples=64, seed=0):
    """Extend F to the torus through t = πx followed by 2π-periodization."""
    residual = boundary_residual(F, samples, seed)
    if residual >= BOUNDARY_TOLERANCE:
        raise PreconditionError(
            f"{F.name} does not vanish on the boundary of D (max face value {residual:.3e})")
    scale = np.pi ** (-2 * F.dim)

    def evaluate(t):
        return F.eval(wrap_to_torus(t) / np.pi)

    def derivative(t):
        return scale * F.mixed_deriv(wrap_to_torus(t) / np.pi)

    return PeriodicFunction(F.dim, evaluate, derivative, F)


def extension_c1_constant(F, quad=None):
    """Measured ||∂^{2d}f||_{L∞(T^d)} / ||F||_{X^{2,∞}(D)} for the torus extension.

    This is the quantity the constant C_1(d) has to dominate.
    """
    quad = quad or QuadratureSpec()
    mixed, plain = lp_norm_parts(F, math.inf, quad)
    total = mixed + plain
    if total == 0.0:
        return 0.0
    return np.pi ** (-2 * F.dim) * mixed / total
