"""Quadrature on the cube D = [-1, 1]^d.

Tensor Gauss-Legendre for d <= 3, Latin-hypercube Monte Carlo beyond that, and
a dense dyadic grid for sup norms. Integrands take an ``(n, d)`` array of
points and return ``n`` values.
"""
import functools
import itertools
import logging
import math
from dataclasses import dataclass

import numpy as np

from errors import EvaluationError, PreconditionError
from rng import make_rng

logger = logging.getLogger(__name__)

MAX_TENSOR_DIM = 3
EXTRA_AXIS_SUP_POINTS = 64


@dataclass(frozen=True)
class QuadratureSpec:
    points_per_axis: int = 64
    mc_points: int = 2 ** 16
    sup_points: int = 256
    seed: int = 0

    def __post_init__(self):
        if self.points_per_axis < 8:
            raise PreconditionError(
                f"quadrature needs at least 8 points per axis, got {self.points_per_axis}")
        if self.mc_points < 2 ** 16:
            raise PreconditionError(f"Monte Carlo quadrature needs >= 2^16 points, got {self.mc_points}")
        if self.sup_points < 8:
            raise PreconditionError(f"sup grid needs at least 8 points per axis, got {self.sup_points}")

    def refined(self):
        return QuadratureSpec(2 * self.points_per_axis, self.mc_points, 2 * self.sup_points, self.seed)


@functools.lru_cache(maxsize=32)
def gauss_legendre_rule(n, d):
    """Tensor Gauss-Legendre nodes and weights on [-1, 1]^d (cached, read-only)."""
    nodes, weights = np.polynomial.legendre.leggauss(n)
    grids = np.meshgrid(*([nodes] * d), indexing="ij")
    points = np.stack([g.ravel() for g in grids], axis=-1)
    wgrids = np.meshgrid(*([weights] * d), indexing="ij")
    w = np.prod(np.stack([g.ravel() for g in wgrids], axis=-1), axis=1)
    points.setflags(write=False)
    w.setflags(write=False)
    return points, w


def latin_hypercube(n, d, seed):
    """Stratified uniform points on D: one point per stratum along every axis."""
    rng = make_rng(seed, "quadrature", d)
    u = np.empty((n, d))
    for j in range(d):
        u[:, j] = (rng.permutation(n) + rng.random(n)) / n
    return 2.0 * u - 1.0


def weighted_nodes(d, spec):
    """Nodes and weights whose weighted sum approximates the integral over D."""
    if d <= MAX_TENSOR_DIM:
        return gauss_legendre_rule(spec.points_per_axis, d)
    points = latin_hypercube(spec.mc_points, d, spec.seed)
    return points, np.full(len(points), 2.0 ** d / len(points))


def sup_axes(d, spec):
    """Per-axis node sets of the sup grid (dyadic, endpoints included)."""
    axes = []
    for j in range(d):
        count = spec.sup_points if j < 2 else EXTRA_AXIS_SUP_POINTS
        axes.append(np.linspace(-1.0, 1.0, count + 1))
    return axes


def iter_sup_slabs(d, spec):
    """Yield the sup grid in slabs of at most two full axes."""
    axes = sup_axes(d, spec)
    lead = axes[:2]
    lead_grid = np.meshgrid(*lead, indexing="ij")
    lead_points = np.stack([g.ravel() for g in lead_grid], axis=-1)
    if d <= 2:
        yield lead_points
        return
    for tail in itertools.product(*axes[2:]):
        slab = np.empty((len(lead_points), d))
        slab[:, :2] = lead_points
        slab[:, 2:] = tail
        yield slab


def _checked(fn, points):
    values = np.asarray(fn(points), dtype=float)
    finite = np.isfinite(values)
    if not finite.all():
        bad = points[np.argmin(finite)]
        raise EvaluationError(f"non-finite value at x={bad.tolist()}", point=bad)
    return values


def integrate(fn, d, spec):
    points, weights = weighted_nodes(d, spec)
    return float(np.dot(weights, _checked(fn, points)))


def sup_norm(fn, d, spec):
    best = 0.0
    for slab in iter_sup_slabs(d, spec):
        best = max(best, float(np.max(np.abs(_checked(fn, slab)))))
    return best


def lp_norm(fn, d, p, spec):
    """||fn||_{L_p(D)} under the quadrature policy of ``spec``."""
    if p < 1:
        raise PreconditionError(f"L_p norms need p >= 1, got {p}")
    if math.isinf(p):
        return sup_norm(fn, d, spec)
    points, weights = weighted_nodes(d, spec)
    values = np.abs(_checked(fn, points))
    return float(np.dot(weights, values ** p) ** (1.0 / p))
