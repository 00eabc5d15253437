"""Fourier analysis on the torus T^d = [-π, π)^d.

Sparse coefficient maps, the Jackson-type smoothing operator J_N with its
tensor-product kernel G_{2^L}, the weight functional v = Σ|ĉ(k)|·‖k‖₁², the
multiplier operator T_L and the dyadic blocks Λ_ℓ.

Coefficients use the normalized measure: ĉ(k) = (2π)^{-d} ∫ f(t) e^{-ik·t} dt.
"""
import itertools
import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from errors import AliasingError, InconsistentSpecError, PreconditionError
from korobov_space import PeriodicFunction, as_points, periodic_extension
from quadrature import lp_norm

logger = logging.getLogger(__name__)

PRUNE_THRESHOLD = 1e-14
SYNTHESIS_CHUNK = 4096
PROFILES = ("jackson2", "vallee_poussin")


@dataclass(frozen=True)
class FourierCoefficients:
    """Sparse map k -> ĉ(k) for ‖k‖_∞ <= kmax."""

    dim: int
    kmax: int
    entries: dict = field(default_factory=dict)

    def __post_init__(self):
        for k in self.entries:
            if len(k) != self.dim:
                raise PreconditionError(f"mode {k} does not have dimension {self.dim}")
            if max((abs(c) for c in k), default=0) > self.kmax:
                raise PreconditionError(f"mode {k} lies beyond kmax={self.kmax}")

    def __getitem__(self, k):
        return self.entries.get(tuple(k), 0j)

    def __len__(self):
        return len(self.entries)

    def modes(self):
        """Modes in lexicographic order."""
        return sorted(self.entries)

    def scaled(self, alpha):
        return FourierCoefficients(self.dim, self.kmax, _pruned({k: alpha * v for k, v in self.entries.items()}))

    def combine(self, other, alpha=1.0, beta=1.0):
        """alpha*self + beta*other."""
        if other.dim != self.dim:
            raise PreconditionError(f"cannot combine {self.dim}-d and {other.dim}-d coefficients")
        out = {k: alpha * v for k, v in self.entries.items()}
        for k, v in other.entries.items():
            out[k] = out.get(k, 0j) + beta * v
        return FourierCoefficients(self.dim, max(self.kmax, other.kmax), _pruned(out))

    def __add__(self, other):
        return self.combine(other)

    def __sub__(self, other):
        return self.combine(other, 1.0, -1.0)

    def l2_norm(self):
        """Normalized torus L2 norm by Parseval."""
        return math.sqrt(math.fsum(abs(self.entries[k]) ** 2 for k in self.modes()))

    def as_arrays(self):
        modes = self.modes()
        if not modes:
            return np.zeros((0, self.dim), dtype=int), np.zeros(0, dtype=complex)
        return np.array(modes, dtype=int), np.array([self.entries[k] for k in modes], dtype=complex)

    def synthesize(self, points, real=True):
        """Evaluate Σ ĉ(k) e^{ik·t} at scattered torus points."""
        pts = as_points(points, self.dim)
        ks, vals = self.as_arrays()
        out = np.zeros(len(pts), dtype=complex)
        for start in range(0, len(pts), SYNTHESIS_CHUNK):
            chunk = pts[start:start + SYNTHESIS_CHUNK]
            out[start:start + SYNTHESIS_CHUNK] = np.exp(1j * chunk @ ks.T) @ vals
        return out.real if real else out

    def dense(self):
        """Coefficients on the full cube [-kmax, kmax]^d, axis index k + kmax."""
        arr = np.zeros((2 * self.kmax + 1,) * self.dim, dtype=complex)
        for k, v in self.entries.items():
            arr[tuple(c + self.kmax for c in k)] = v
        return arr

    def synthesize_grid(self, grid, real=True):
        """Values on the uniform grid t_i = -π + 2πi/grid, shape (grid,)*d."""
        t = torus_grid(grid)
        freqs = np.arange(-self.kmax, self.kmax + 1)
        basis = np.exp(1j * np.outer(freqs, t))
        out = self.dense()
        for _ in range(self.dim):
            out = np.tensordot(out, basis, axes=([0], [0]))
        return out.real if real else out

    def to_json(self):
        entries = [[list(k), float(self.entries[k].real), float(self.entries[k].imag)] for k in self.modes()]
        return json.dumps({"dim": self.dim, "kmax": self.kmax, "entries": entries})

    @classmethod
    def from_json(cls, text):
        data = json.loads(text)
        entries = {tuple(int(c) for c in k): complex(re, im) for k, re, im in data["entries"]}
        return cls(int(data["dim"]), int(data["kmax"]), entries)


def _pruned(entries):
    return {k: complex(v) for k, v in entries.items() if abs(v) > PRUNE_THRESHOLD}


def torus_grid(grid):
    return -np.pi + 2.0 * np.pi * np.arange(grid) / grid


# -- Jackson kernels -----------------------------------------------------------

def level_for_degree(N):
    """L = ⌈log2 N⌉."""
    if N < 1:
        raise PreconditionError(f"Jackson degree must be >= 1, got {N}")
    return int(math.ceil(math.log2(N) - 1e-12)) if N > 1 else 0


def jackson2_profile(L):
    """Normalized autocorrelation of the Fejér triangle of order 2^{L-1}.

    This is the coefficient sequence of the squared Fejér kernel: nonnegative
    kernel, a_0 = 1, supported on |j| <= 2^L.
    """
    n = 2 ** (L - 1) if L >= 1 else 1
    # 1 - |j|/n vanishes at |j| = n, so the autocorrelation stops at 2n - 2 < 2^L
    triangle = 1.0 - np.abs(np.arange(-n, n + 1)) / n
    corr = np.convolve(triangle, triangle[::-1])
    half = corr[2 * n:2 * n + 2 ** L + 1] / corr[2 * n]
    return tuple(float(a) for a in half)


def vallee_poussin_profile(L):
    """1 for |j| <= 2^{L-1}, then linear decay to 0 at 2^L."""
    top = 2 ** L
    if L == 0:
        return (1.0, 0.0)
    low = top // 2
    return tuple(1.0 if j <= low else (top - j) / (top - low) for j in range(top + 1))


_PROFILE_BUILDERS = {"jackson2": jackson2_profile, "vallee_poussin": vallee_poussin_profile}


@dataclass(frozen=True)
class JacksonSpec:
    """Degree N, level L = ⌈log2 N⌉ and the univariate profile a_j for 0 <= j <= 2^L."""

    N: int
    L: int
    profile: tuple
    name: str = "custom"

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.N < 1:
            raise InconsistentSpecError(f"degree must be >= 1, got {self.N}")
        if self.L != level_for_degree(self.N):
            raise InconsistentSpecError(f"L={self.L} does not equal ceil(log2 {self.N})")
        if len(self.profile) != 2 ** self.L + 1:
            raise InconsistentSpecError(
                f"profile has {len(self.profile)} entries, level {self.L} needs {2 ** self.L + 1}")
        if abs(self.profile[0] - 1.0) > 1e-12:
            raise InconsistentSpecError(f"a_0 must be 1, got {self.profile[0]}")
        if any(abs(a) > 1.0 + 1e-12 for a in self.profile):
            raise InconsistentSpecError("profile entries must satisfy |a_j| <= 1")

    @classmethod
    def from_degree(cls, N, profile="jackson2"):
        if profile not in _PROFILE_BUILDERS:
            raise PreconditionError(f"unknown kernel profile {profile!r}; expected one of {PROFILES}")
        L = level_for_degree(N)
        return cls(N, L, _PROFILE_BUILDERS[profile](L), profile)

    @property
    def support(self):
        return 2 ** self.L

    def coefficient(self, j):
        j = abs(int(j))
        return self.profile[j] if j <= self.support else 0.0

    def multiplier(self, k):
        """a_{k,2^L} = ∏_j a_{k_j}."""
        out = 1.0
        for c in k:
            out *= self.coefficient(c)
        return out

    def univariate_kernel(self, t):
        """g(t) = Σ_{|j|<=2^L} a_j e^{ijt}; G_{2^L}(t) = ∏_j g(t_j)."""
        t = np.asarray(t, dtype=float)
        out = np.full(t.shape, self.profile[0])
        for j in range(1, self.support + 1):
            out += 2.0 * self.profile[j] * np.cos(j * t)
        return out


# -- operators -----------------------------------------------------------------

def analyze(f, K_max, grid):
    """Fourier coefficients of f for ‖k‖_∞ <= K_max by the trapezoid rule.

    The trapezoid rule on a uniform periodic grid is exact for trigonometric
    polynomials of degree below ``grid - K_max``.
    """
    if grid < 2 * K_max + 2:
        raise AliasingError(f"analysis grid {grid} too small for K_max={K_max}; need >= {2 * K_max + 2}")
    d = f.dim
    t = torus_grid(grid)
    mesh = np.meshgrid(*([t] * d), indexing="ij")
    points = np.stack([m.ravel() for m in mesh], axis=-1)
    values = np.asarray(f.eval(points), dtype=float).reshape((grid,) * d)
    if not np.all(np.isfinite(values)):
        raise PreconditionError("periodic function returned non-finite values on the analysis grid")
    spectrum = np.fft.fftn(values) / grid ** d

    freqs = np.arange(-K_max, K_max + 1)
    block = spectrum[np.ix_(*([np.mod(freqs, grid)] * d))]
    # the grid starts at -π, so every mode picks up e^{ikπ}
    parity = np.ones(block.shape)
    for axis in range(d):
        shape = [1] * d
        shape[axis] = len(freqs)
        parity = parity * ((-1.0) ** np.abs(freqs)).reshape(shape)
    block = block * parity

    entries = {}
    for idx in itertools.product(range(len(freqs)), repeat=d):
        value = block[idx]
        if abs(value) > PRUNE_THRESHOLD:
            entries[tuple(int(freqs[i]) for i in idx)] = complex(value)
    logger.debug(f"Analyzed {d}-d function: {len(entries)} modes above threshold (K_max={K_max}, grid={grid})")
    return FourierCoefficients(d, K_max, entries)


def default_analysis_grid(K_max):
    return max(64, 4 * K_max)


def jackson_apply(f, spec, grid=None):
    """Coefficients of J_N f: k -> a_{k,2^L}·f̂(k)."""
    spec.validate()
    if isinstance(f, PeriodicFunction):
        f = analyze(f, spec.support, grid or default_analysis_grid(spec.support))
    if f.kmax < spec.support:
        raise PreconditionError(f"coefficients truncated at kmax={f.kmax} < 2^L={spec.support}")
    out = {k: spec.multiplier(k) * v for k, v in f.entries.items()}
    return FourierCoefficients(f.dim, min(f.kmax, spec.support), _pruned(out))


def v_weight(c):
    """v = Σ_k |ĉ(k)|·‖k‖₁²."""
    return math.fsum(abs(c.entries[k]) * sum(abs(x) for x in k) ** 2 for k in c.modes())


def t_l_apply(c, spec):
    """Coefficients of T_L f: k -> a_{k,2^L}·ĉ(k)·∏_s k_s²."""
    if c.kmax < spec.support:
        raise PreconditionError(f"T_L needs modes up to 2^L={spec.support}, coefficients stop at {c.kmax}")
    out = {}
    for k, v in c.entries.items():
        weight = float(np.prod(np.asarray(k, dtype=float) ** 2))
        if weight:
            out[k] = spec.multiplier(k) * v * weight
    return FourierCoefficients(c.dim, min(c.kmax, spec.support), _pruned(out))


def torus_l2_norm(c):
    """Unnormalized L2(T^d) norm, (2π)^{d/2}·sqrt(Σ|ĉ(k)|²)."""
    return (2.0 * np.pi) ** (c.dim / 2) * c.l2_norm()


def kernel_lq_norm(spec, d, q, grid=None, normalized=False):
    """‖G_{2^L}‖_{L_q(T^d)} as the d-th power of the univariate norm."""
    grid = grid or max(1024, 8 * spec.support)
    if grid < 8 * spec.support:
        raise PreconditionError(f"kernel grid {grid} below 8·2^L={8 * spec.support}")
    g = np.abs(spec.univariate_kernel(torus_grid(grid)))
    if math.isinf(q):
        return float(g.max()) ** d
    scale = 1.0 / grid if normalized else 2.0 * np.pi / grid
    return float((scale * np.sum(g ** q)) ** (1.0 / q)) ** d


def kernel_norms(spec, d, grid=None):
    """(L1 with the normalized measure dt/(2π)^d, L∞) of G_{2^L}."""
    grid = grid or max(1024, 8 * spec.support)
    l1 = kernel_lq_norm(spec, d, 1.0, grid, normalized=True)
    linf = kernel_lq_norm(spec, d, math.inf, grid)
    return l1, linf


def fit_kernel_c2(spec_levels, d=1):
    """Fitted C_2 with ‖G‖_∞ = 3·C_2^d·(2^{L+1}+1)^d at each level."""
    fitted = []
    for spec in spec_levels:
        _, linf = kernel_norms(spec, d)
        fitted.append((linf / 3.0) ** (1.0 / d) / (2 ** (spec.L + 1) + 1))
    return fitted


def mixed_derivative_torus_lp(F, p, quad):
    """‖∂^{2d}f‖_{L_p(T^d)} of the torus extension, from quadrature on D.

    With t = πx the torus derivative is π^{-2d}·F''(x) and dt = π^d dx.
    """
    d = F.dim
    on_d = lp_norm(F.mixed_deriv, d, p, quad)
    if math.isinf(p):
        return np.pi ** (-2 * d) * on_d
    return np.pi ** (d / p) * np.pi ** (-2 * d) * on_d


def young_bound(F, spec, p, quad, grid=None):
    """Both sides of ‖T_L f‖_2 <= (2π)^{-d}·‖∂^{2d}f‖_p·‖G_{2^L}‖_q.

    For p >= 2 the q-exponent would drop below 1, so the right-hand side is
    ‖∂f‖_2·‖G‖_1 with ‖∂f‖_2 <= (2π)^{d(1/2-1/p)}‖∂f‖_p.
    """
    d = F.dim
    coeffs = analyze(periodic_extension(F), spec.support, grid or default_analysis_grid(spec.support))
    lhs = torus_l2_norm(t_l_apply(coeffs, spec))
    deriv = mixed_derivative_torus_lp(F, p, quad)
    if p < 2:
        q = 2.0 * p / (3.0 * p - 2.0)
        rhs = (2.0 * np.pi) ** (-d) * deriv * kernel_lq_norm(spec, d, q)
    else:
        q = 1.0
        holder = (2.0 * np.pi) ** (d * (0.5 - (0.0 if math.isinf(p) else 1.0 / p)))
        rhs = (2.0 * np.pi) ** (-d) * holder * deriv * kernel_lq_norm(spec, d, 1.0)
    return {"lhs": lhs, "rhs": rhs, "q": q, "holds": lhs <= rhs * (1 + 1e-9)}


def jackson_sup_error(f, spec, points=4096):
    """‖J_N f - f‖_∞ on a uniform torus grid (``points`` total in 1-d, 256 per axis beyond)."""
    grid = points if f.dim == 1 else 256
    coeffs = jackson_apply(f, spec, max(default_analysis_grid(spec.support), 2 * spec.support + 2))
    approx = coeffs.synthesize_grid(grid)
    t = torus_grid(grid)
    mesh = np.meshgrid(*([t] * f.dim), indexing="ij")
    exact = np.asarray(f.eval(np.stack([m.ravel() for m in mesh], axis=-1))).reshape(approx.shape)
    return float(np.max(np.abs(approx - exact)))


# -- dyadic blocks ---------------------------------------------------------------

def in_block(k, ell):
    """k ∈ Λ_ℓ iff 2^{ℓ_j-1} < |k_j| <= 2^{ℓ_j} for every j."""
    return all(2.0 ** (l - 1) < abs(c) <= 2 ** l for c, l in zip(k, ell))


def block_index(k):
    """ℓ with k ∈ Λ_ℓ, or None when some k_j = 0."""
    if any(c == 0 for c in k):
        return None
    return tuple(int(math.ceil(math.log2(abs(c)) - 1e-12)) if abs(c) > 1 else 0 for c in k)


def dyadic_blocks(L, d):
    """Yield (ℓ, membership predicate) for ℓ ∈ {0,…,L}^d."""
    if L < 0:
        raise PreconditionError(f"L must be >= 0, got {L}")
    for ell in itertools.product(range(L + 1), repeat=d):
        yield ell, (lambda k, ell=ell: in_block(k, ell))


def block_members(ell):
    """All k of Λ_ℓ in lexicographic order."""
    axes = []
    for l in ell:
        low = 2 ** (l - 1) if l >= 1 else 0
        mags = list(range(low + 1, 2 ** l + 1))
        axes.append(sorted([-j for j in mags] + mags))
    return list(itertools.product(*axes))


def block_sums(c, spec):
    """S_{ℓ,j} = Σ_{k∈Λ_ℓ} |ĉ(k)|·k_j² per block, and the chain bound v <= d·Σ S.

    Modes with a zero component belong to no block; their v-mass is reported
    as ``uncovered``.
    """
    sums = {}
    uncovered = 0.0
    for k in c.modes():
        weight = sum(abs(x) for x in k) ** 2
        ell = block_index(k)
        if ell is None or max(ell) > spec.L:
            uncovered += abs(c.entries[k]) * weight
            continue
        row = sums.setdefault(ell, [0.0] * c.dim)
        for j, x in enumerate(k):
            row[j] += abs(c.entries[k]) * x * x
    total = math.fsum(math.fsum(row) for row in sums.values())
    return {"blocks": sums, "chain_bound": c.dim * total, "uncovered": uncovered, "v": v_weight(c)}
