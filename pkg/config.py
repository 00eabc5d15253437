"""Constants, training budgets and experiment configuration files."""
import dataclasses
import hashlib
import json
import logging
import math
import os
import tomllib
from dataclasses import dataclass, field
from typing import Optional

from errors import PreconditionError
from quadrature import QuadratureSpec

logger = logging.getLogger(__name__)

EXPERIMENTS = ("approx_rate", "learn_rate", "noise_rate", "covering_check", "inequality_suite")
DEFAULT_N_MAX = 200_000


@dataclass(frozen=True)
class Constants:
    """Literature constants the bounds are stated in terms of (defaults 1)."""

    C1: float = 1.0
    C2: float = 1.0
    C3: float = 1.0
    C4: float = 1.0
    C5: float = 1.0
    C_theta: float = 1.0
    C0prime: Optional[float] = None
    C_phi: Optional[float] = None

    def __post_init__(self):
        for name in ("C1", "C2", "C3", "C4", "C5", "C_theta"):
            if not getattr(self, name) > 0:
                raise PreconditionError(f"constant {name} must be positive, got {getattr(self, name)}")


@dataclass(frozen=True)
class TrainBudget:
    restarts: int = 8
    iterations: int = 2000
    step: float = 0.1
    refresh_every: int = 0
    max_total_iterations: Optional[int] = None

    def __post_init__(self):
        if self.restarts < 1 or self.iterations < 1:
            raise PreconditionError(
                f"budget needs restarts >= 1 and iterations >= 1, got {self.restarts}/{self.iterations}")
        if self.step <= 0:
            raise PreconditionError(f"step constant must be positive, got {self.step}")


def _inf_safe(value):
    return "inf" if isinstance(value, float) and math.isinf(value) else value


def _parse_p(value):
    if isinstance(value, str):
        if value.strip().lower() in ("inf", "infinity", "∞"):
            return math.inf
        return float(value)
    return float(value)


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    d: int = 1
    p: float = math.inf
    eta: float = 1.0
    theta: Optional[float] = None
    tau: float = 1.0
    delta: float = 0.1
    family: str = "sine_product"
    family_params: dict = field(default_factory=dict)
    m_grid: tuple = (64, 128, 256, 512)
    seeds: tuple = tuple(range(16))
    constants: Constants = field(default_factory=Constants)
    output_dir: str = "results"
    n_max: int = DEFAULT_N_MAX
    refit: bool = True
    budget: TrainBudget = field(default_factory=TrainBudget)
    quadrature: QuadratureSpec = field(default_factory=QuadratureSpec)
    population_n: int = 100_000
    jobs: int = 1
    seed_offset: int = 0

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise PreconditionError(f"unknown experiment {self.experiment!r}; expected one of {EXPERIMENTS}")
        if self.d < 1:
            raise PreconditionError(f"d must be >= 1, got {self.d}")
        if self.p < 1:
            raise PreconditionError(f"p must be >= 1, got {self.p}")
        if self.eta < 1:
            raise PreconditionError(f"eta must be >= 1, got {self.eta}")
        if not self.seeds:
            raise PreconditionError("seeds must be nonempty")
        grid = list(self.m_grid)
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise PreconditionError(f"m_grid must be strictly increasing, got {grid}")

    @classmethod
    def defaults(cls, experiment):
        """Default configuration of each experiment."""
        if experiment == "approx_rate":
            return cls(experiment)
        if experiment == "learn_rate":
            return cls(experiment, p=2.0, eta=1.0, tau=1.0, family="linear", m_grid=(8, 16, 32),
                       seeds=tuple(range(8)), budget=TrainBudget(restarts=4, iterations=500))
        if experiment == "noise_rate":
            return cls(experiment, p=2.0, eta=2.0, tau=1.0, theta=1.0, family="linear", m_grid=(2, 4, 8),
                       seeds=tuple(range(8)), budget=TrainBudget(restarts=4, iterations=500))
        if experiment == "covering_check":
            return cls(experiment, m_grid=(1, 2), seeds=(0,))
        if experiment == "inequality_suite":
            return cls(experiment, seeds=(0,))
        raise PreconditionError(f"unknown experiment {experiment!r}; expected one of {EXPERIMENTS}")

    @classmethod
    def from_dict(cls, experiment, data):
        data = dict(data)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise PreconditionError(f"unknown config keys: {unknown}")
        experiment = data.pop("experiment", experiment)
        if experiment is None:
            raise PreconditionError("config does not name an experiment")
        base = cls.defaults(experiment)
        updates = {}
        for key, value in data.items():
            if key == "constants":
                updates[key] = dataclasses.replace(base.constants, **value)
            elif key == "budget":
                updates[key] = dataclasses.replace(base.budget, **value)
            elif key == "quadrature":
                updates[key] = dataclasses.replace(base.quadrature, **value)
            elif key in ("m_grid", "seeds"):
                updates[key] = tuple(int(v) for v in value)
            elif key == "p":
                updates[key] = _parse_p(value)
            else:
                updates[key] = value
        return dataclasses.replace(base, **updates)

    @classmethod
    def load(cls, path, experiment=None):
        """Read a JSON or TOML config file; keys missing from it take defaults."""
        try:
            ext = os.path.splitext(path)[1].lower()
            if ext == ".toml":
                with open(path, "rb") as fh:
                    data = tomllib.load(fh)
            elif ext == ".json":
                with open(path, "r", encoding="utf-8") as fh:
                    data = json.load(fh)
            else:
                raise PreconditionError(f"config must be .json or .toml, got {path}")
            cfg = cls.from_dict(experiment, data)
            logger.info(f"Loaded {cfg.experiment} config from {path} (hash {cfg.config_hash()[:12]})")
            return cfg
        except PreconditionError:
            raise
        except Exception as e:
            logger.error(f"Failed to load config {path}: {str(e)}", exc_info=True)
            raise PreconditionError(f"cannot read config {path}: {e}") from e

    def with_overrides(self, **overrides):
        overrides = {k: v for k, v in overrides.items() if v is not None}
        return dataclasses.replace(self, **overrides) if overrides else self

    def to_dict(self):
        data = dataclasses.asdict(self)
        data["p"] = _inf_safe(self.p)
        data["m_grid"] = list(self.m_grid)
        data["seeds"] = list(self.seeds)
        return data

    def config_hash(self):
        """SHA-256 of the canonical JSON form; output location and job count excluded."""
        data = self.to_dict()
        data.pop("output_dir")
        data.pop("jobs")
        canonical = json.dumps(data, sort_keys=True, separators=(",", ":"), default=str)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
