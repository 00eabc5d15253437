"""Width-m shallow ReLU networks, the constraint class H_m and the sampled construction."""
import json
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import lsq_linear

from errors import DegenerateTargetError, PreconditionError
from korobov_space import as_points, periodic_extension
from periodic_fourier import (JacksonSpec, analyze, default_analysis_grid, jackson_apply,
                              jackson_sup_error, v_weight)
from quadrature import QuadratureSpec, lp_norm, weighted_nodes
from rng import make_rng

logger = logging.getLogger(__name__)

CONSTRAINT_TOLERANCE = 1e-12
RIDGE_DAMPING = 1e-10


def relu(z):
    return np.maximum(z, 0.0)


@dataclass(frozen=True, eq=False)
class ShallowNet:
    """f(x) = offset + Σ_k β_k·max(α_k·x - b_k, 0)."""

    alpha: np.ndarray
    b: np.ndarray
    beta: np.ndarray
    offset: float = 0.0

    def __post_init__(self):
        alpha = np.atleast_2d(np.asarray(self.alpha, dtype=float))
        b = np.asarray(self.b, dtype=float).reshape(-1)
        beta = np.asarray(self.beta, dtype=float).reshape(-1)
        if not (len(alpha) == len(b) == len(beta)):
            raise PreconditionError(f"atom arrays disagree: {len(alpha)}, {len(b)}, {len(beta)}")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "offset", float(self.offset))

    @classmethod
    def zero(cls, d, m=0):
        return cls(np.zeros((m, d)), np.zeros(m), np.zeros(m))

    @property
    def d(self):
        return self.alpha.shape[1]

    @property
    def m(self):
        return len(self.beta)

    @property
    def atoms(self):
        return [(tuple(a), float(b), float(beta)) for a, b, beta in zip(self.alpha, self.b, self.beta)]

    def with_beta(self, beta):
        return ShallowNet(self.alpha, self.b, beta, self.offset)

    def features(self, x):
        """ReLU activations σ(α_k·x - b_k), shape (n, m)."""
        return relu(as_points(x, self.d) @ self.alpha.T - self.b)

    def __call__(self, x):
        return evaluate(self, x)

    def same_as(self, other):
        return (self.offset == other.offset and np.array_equal(self.alpha, other.alpha)
                and np.array_equal(self.b, other.b) and np.array_equal(self.beta, other.beta))

    def to_json(self):
        atoms = [{"alpha": [float(a) for a in alpha], "b": float(b), "beta": float(beta)}
                 for alpha, b, beta in zip(self.alpha, self.b, self.beta)]
        return json.dumps({"d": self.d, "m": self.m, "offset": self.offset, "atoms": atoms})

    @classmethod
    def from_json(cls, text):
        data = json.loads(text)
        d = int(data["d"])
        atoms = data["atoms"]
        if len(atoms) != int(data["m"]):
            raise PreconditionError(f"net declares m={data['m']} but carries {len(atoms)} atoms")
        alpha = np.array([a["alpha"] for a in atoms], dtype=float).reshape(len(atoms), d)
        return cls(alpha, [a["b"] for a in atoms], [a["beta"] for a in atoms], data.get("offset", 0.0))


def evaluate(net, x):
    """Network output at a point or a batch of points."""
    pts = as_points(x, net.d)
    if net.m == 0:
        return np.full(len(pts), net.offset)
    return relu(pts @ net.alpha.T - net.b) @ net.beta + net.offset


# -- hypothesis class ------------------------------------------------------------

@dataclass(frozen=True)
class HypothesisConstraints:
    d: int
    m: int
    beta_cap: float
    alpha_l1_cap: float = 1.0
    b_range: tuple = (0.0, 1.0)

    @classmethod
    def from_c5(cls, d, m, c5):
        """β cap 4π²·C_5·m^{(1+2/d)/10}/m."""
        if m < 1:
            raise PreconditionError(f"width must be >= 1, got {m}")
        return cls(d, m, 4.0 * np.pi ** 2 * c5 * m ** ((1.0 + 2.0 / d) / 10.0) / m)

    @classmethod
    def from_v(cls, d, m, v):
        """The cap 4π²·v/m realized by the sampled construction."""
        if m < 1:
            raise PreconditionError(f"width must be >= 1, got {m}")
        return cls(d, m, 4.0 * np.pi ** 2 * v / m)


@dataclass(frozen=True)
class ConstraintReport:
    ok: bool
    atom: Optional[int] = None
    constraint: Optional[str] = None
    value: Optional[float] = None
    limit: Optional[float] = None

    def __bool__(self):
        return self.ok

    def describe(self):
        if self.ok:
            return "all atoms satisfy the constraints"
        return f"atom {self.atom}: {self.constraint}={self.value!r} violates limit {self.limit!r}"


def check_constraints(net, c):
    """First atom violating ‖α‖₁ <= 1, b ∈ [0, 1] or |β| <= cap; the offset is exempt."""
    if net.d != c.d:
        return ConstraintReport(False, None, "d", net.d, c.d)
    tol = CONSTRAINT_TOLERANCE
    low, high = c.b_range
    for i, (alpha, b, beta) in enumerate(zip(net.alpha, net.b, net.beta)):
        l1 = float(np.sum(np.abs(alpha)))
        if l1 > c.alpha_l1_cap + tol:
            return ConstraintReport(False, i, "alpha", l1, c.alpha_l1_cap)
        if b < low - tol:
            return ConstraintReport(False, i, "b", float(b), low)
        if b > high + tol:
            return ConstraintReport(False, i, "b", float(b), high)
        if abs(beta) > c.beta_cap + tol:
            return ConstraintReport(False, i, "beta", float(beta), c.beta_cap)
    return ConstraintReport(True)


# -- sampled construction ----------------------------------------------------------

def maurey_construct(c, m, seed):
    """Sample a width-m net approximating Σ_k ĉ(k)·e^{iπk·x} on D.

    Each mode is the ridge A·cos(ω·u + φ) with u = α·x, α = k/‖k‖₁,
    ω = π‖k‖₁, A = |ĉ(k)|, φ = arg ĉ(k). On u ∈ [-1, 1] the ridge equals

        h(0) + h'(0)(σ(u) - σ(-u)) + ∫₀¹ h''(b)σ(u-b) db + ∫₀¹ h''(-b)σ(-u-b) db

    so every term is a ReLU atom with bias in [0, 1]. Modes are drawn with
    probability ∝ A‖k‖₁², then a linear or curvature atom in proportion to
    their envelopes. All h(0) go into the offset.
    """
    if m < 1:
        raise PreconditionError(f"width must be >= 1, got {m}")
    v = v_weight(c)
    if v <= 0.0:
        raise DegenerateTargetError("v_weight is 0: the target is constant, carry it in the offset")

    modes = [k for k in c.modes() if any(k)]
    coef = np.array([c.entries[k] for k in modes], dtype=complex)
    ks = np.array(modes, dtype=float)
    l1 = np.sum(np.abs(ks), axis=1)
    amp = np.abs(coef)
    phase = np.angle(coef)
    omega = np.pi * l1
    e_lin = 2.0 * amp * omega * np.abs(np.sin(phase))
    e_curv = 2.0 * amp * omega ** 2
    envelope = e_lin + e_curv
    prob = amp * l1 ** 2 / v

    rng = make_rng(seed, "maurey", c.dim)
    pick = rng.choice(len(modes), size=m, p=prob / prob.sum())
    branch = rng.random(m)
    sign = np.where(rng.random(m) < 0.5, 1.0, -1.0)
    bias = rng.random(m)

    alpha = np.empty((m, c.dim))
    b = np.empty(m)
    beta = np.empty(m)
    for i, j in enumerate(pick):
        direction = ks[j] / l1[j]
        s = sign[i]
        alpha[i] = s * direction
        if branch[i] < e_lin[j] / envelope[j]:
            b[i] = 0.0
            weight = -s * np.sign(np.sin(phase[j])) * envelope[j]
        else:
            b[i] = bias[i]
            weight = -np.cos(s * omega[j] * bias[i] + phase[j]) * envelope[j]
        beta[i] = weight / (prob[j] * m)

    # Σ_k h_k(0) plus the constant mode
    offset = float(sum(value.real for value in c.entries.values()))
    net = ShallowNet(alpha, b, beta, offset)
    logger.debug(f"Sampled {m} atoms from {len(modes)} modes (v={v:.6g}, max|beta|={np.max(np.abs(beta)):.4g})")
    return net


def grid_l2_error(net, target, nodes, weights):
    resid = evaluate(net, nodes) - np.asarray(target(nodes), dtype=float)
    return float(math.sqrt(np.dot(weights, resid ** 2)))


def refit_beta(net, target, cap, grid):
    """Box-constrained least squares for β on the quadrature nodes of ``grid``.

    Solved for the correction Δ = β_new - β with a 1e-10 ridge on Δ. The refit is
    kept only when it does not raise the grid L2 error of the input clipped to
    [-cap, cap]. An input with |β_k| > cap can therefore have a smaller error
    than the result; the result always satisfies the cap.
    """
    if net.m == 0:
        raise PreconditionError("cannot refit an empty net")
    if cap < 0:
        raise PreconditionError(f"beta cap must be >= 0, got {cap}")
    nodes, weights = weighted_nodes(net.d, grid)
    start = net.with_beta(np.clip(net.beta, -cap, cap))
    if cap == 0.0:
        return start

    sqrt_w = np.sqrt(weights)
    design = net.features(nodes) * sqrt_w[:, None]
    resid = (np.asarray(target(nodes), dtype=float) - evaluate(start, nodes)) * sqrt_w
    if np.linalg.matrix_rank(design) < net.m:
        logger.warning(f"Refit design is rank deficient (m={net.m}, nodes={len(nodes)}); ridge {RIDGE_DAMPING:g} applied")
    damped = np.vstack([design, math.sqrt(RIDGE_DAMPING) * np.eye(net.m)])
    rhs = np.concatenate([resid, np.zeros(net.m)])
    lower = -cap - start.beta
    upper = cap - start.beta
    solution = lsq_linear(damped, rhs, bounds=(lower, upper), method="trf", tol=1e-12)
    refit = start.with_beta(np.clip(start.beta + solution.x, -cap, cap))

    before = grid_l2_error(start, target, nodes, weights)
    after = grid_l2_error(refit, target, nodes, weights)
    if after > before:
        logger.info(f"Refit did not improve the grid error ({after:.3e} > {before:.3e}); keeping input weights")
        refit, after = start, before
    if np.any(np.abs(net.beta) > cap):
        original = grid_l2_error(net, target, nodes, weights)
        if after > original:
            logger.warning(f"Input beta exceeded the cap {cap:.3e}; capped refit error {after:.3e} is above the "
                           f"uncapped input error {original:.3e}")
    return refit


def approx_error(F, net, p, quad):
    """‖F - net‖_{L_p(D)}."""
    return lp_norm(lambda x: F.eval(x) - evaluate(net, x), net.d, p, quad)


# -- approximation pipeline -----------------------------------------------------------

def degree_exponent(d, p):
    if p >= 2:
        return (1.0 + 2.0 / d) / 5.0
    return (d + 2.0) / (5.0 * d + (2.0 / p - 1.0) * d * d)


def coupled_degree(m, d, p):
    """N = ⌊m^{e}⌋ with e = (1+2/d)/5 for p >= 2 and (d+2)/(5d+(2/p-1)d²) below."""
    if m < 1:
        raise PreconditionError(f"width must be >= 1, got {m}")
    return max(1, int(math.floor(m ** degree_exponent(d, p) * (1.0 + 1e-12))))


def theoretical_approx_exponent(d, p):
    """Exponent of m in the L_p approximation rate."""
    if p >= 2:
        return -2.0 * (d + 2.0) / (5.0 * d)
    return -2.0 * (d + 2.0) / (5.0 * d + (2.0 / p - 1.0) * d * d)


def c5_formula(d, C1, C2):
    """C_5(d) = 2√3·d²·2^{5d-3}·(3C_2/(2π))^{d/2}·C_1(d)."""
    return 2.0 * math.sqrt(3.0) * d ** 2 * 2.0 ** (5 * d - 3) * (3.0 * C2 / (2.0 * np.pi)) ** (d / 2) * C1


def c_formula(d, C1, C2, C3, C4):
    """C(d) = 2d·4^d·C_1·C_3 + d^{3/2}·C_4·C_5(d)."""
    return 2.0 * d * 4.0 ** d * C1 * C3 + d ** 1.5 * C4 * c5_formula(d, C1, C2)


def maurey_error_bound(v, d, m, C4):
    """C_4·v·d^{3/2}·√(log m)·m^{-1/2-1/d}."""
    if m < 2:
        raise PreconditionError(f"the sampling bound needs m >= 2, got {m}")
    return C4 * v * d ** 1.5 * math.sqrt(math.log(m)) * m ** (-0.5 - 1.0 / d)


def refit_grid(d, m, quad):
    """Quadrature nodes for the β refit: at least two nodes per atom."""
    per_axis = max(quad.points_per_axis, int(math.ceil((2 * m) ** (1.0 / d))))
    return QuadratureSpec(per_axis, quad.mc_points, quad.sup_points, quad.seed)


@dataclass
class ApproximationResult:
    net: ShallowNet
    error: float
    diagnostics: dict = field(default_factory=dict)


def theorem1_pipeline(F, m, p, seed, quad=None, refit=False, profile="jackson2", constants=None):
    """Extension, analysis, Jackson smoothing, sampled net, optional refit and error."""
    if m < 2:
        raise PreconditionError(f"the pipeline needs m >= 2, got {m}")
    quad = quad or QuadratureSpec()
    d = F.dim
    try:
        N = coupled_degree(m, d, p)
        spec = JacksonSpec.from_degree(N, profile)
        f = periodic_extension(F)
        coeffs = analyze(f, spec.support, default_analysis_grid(spec.support))
        smoothed = jackson_apply(coeffs, spec)
        v = v_weight(smoothed)
        logger.info(f"Approximation pipeline: d={d}, p={p}, m={m}, N={N}, L={spec.L}, v={v:.6g}, seed={seed}")

        net = maurey_construct(smoothed, m, seed)
        realized = HypothesisConstraints.from_v(d, m, v)
        raw_error = None
        if refit:
            target = lambda x: smoothed.synthesize(np.pi * np.asarray(x))
            raw_error = approx_error(F, net, p, quad)
            net = refit_beta(net, target, realized.beta_cap, refit_grid(d, m, quad))
        error = approx_error(F, net, p, quad)

        certificate = check_constraints(net, realized)
        c5 = constants.C5 if constants is not None else 1.0
        mean_mode = abs(smoothed[(0,) * d])
        diagnostics = {
            "N": N,
            "L": spec.L,
            "v": v,
            "jackson_error": jackson_sup_error(f, spec),
            "certificate": certificate.ok,
            "certificate_detail": certificate.describe(),
            "c5_certificate": check_constraints(net, HypothesisConstraints.from_c5(d, m, c5)).ok,
            "beta_cap": realized.beta_cap,
            "offset": net.offset,
            "constant_mode": mean_mode,
            "large_mean": mean_mode > 0.1 * sum(abs(value) for value in smoothed.entries.values()),
            "raw_error": raw_error if raw_error is not None else error,
        }
        if not certificate.ok:
            logger.warning(f"Constructed net violates its realized cap: {certificate.describe()}")
        return ApproximationResult(net, error, diagnostics)
    except Exception as e:
        logger.error(f"Approximation pipeline failed for m={m}, p={p}, seed={seed}: {str(e)}", exc_info=True)
        raise
