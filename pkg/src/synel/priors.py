"""Prior distributions over parameter vectors.

Only the shapes the samplers need: uniform boxes, independent normals,
products of scalar marginals, and an improper flat prior for MCMC use.
All log densities return ``-inf`` outside the support.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError

__all__ = [
    "UniformBoxPrior",
    "NormalPrior",
    "ProductPrior",
    "FlatPrior",
    "prior_from_config",
]

_LOG_2PI = float(np.log(2.0 * np.pi))


def _as_vector(x, name: str) -> np.ndarray:
    v = np.atleast_1d(np.asarray(x, dtype=float))
    if v.ndim != 1:
        raise ConfigError(f"{name} must be a vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ConfigError(f"{name} must be finite")
    return v


class UniformBoxPrior:
    """Uniform density on the box [lower, upper] (componentwise)."""

    def __init__(self, lower, upper):
        self.lower = _as_vector(lower, "lower")
        self.upper = _as_vector(upper, "upper")
        if self.lower.shape != self.upper.shape:
            raise ConfigError("lower and upper must have equal length")
        if not np.all(self.lower < self.upper):
            raise ConfigError("require lower < upper componentwise")
        self.dim = self.lower.size
        self._log_volume = float(np.sum(np.log(self.upper - self.lower)))

    def logpdf(self, theta) -> float:
        t = np.asarray(theta, dtype=float)
        if np.all(t >= self.lower) and np.all(t <= self.upper):
            return -self._log_volume
        return -np.inf

    def sample(self, gen: np.random.Generator) -> np.ndarray:
        return gen.uniform(self.lower, self.upper)


class NormalPrior:
    """Independent normal marginals with per-coordinate mean and sd."""

    def __init__(self, mean, sd):
        self.mean = _as_vector(mean, "mean")
        self.sd = _as_vector(sd, "sd")
        if self.mean.shape != self.sd.shape:
            raise ConfigError("mean and sd must have equal length")
        if not np.all(self.sd > 0):
            raise ConfigError("require sd > 0")
        self.dim = self.mean.size
        self._log_norm = float(-np.sum(np.log(self.sd)) - 0.5 * self.dim * _LOG_2PI)

    def logpdf(self, theta) -> float:
        z = (np.asarray(theta, dtype=float) - self.mean) / self.sd
        return self._log_norm - 0.5 * float(z @ z)

    def sample(self, gen: np.random.Generator) -> np.ndarray:
        return self.mean + self.sd * gen.standard_normal(self.dim)


class ProductPrior:
    """Product of independent one-dimensional marginal priors."""

    def __init__(self, marginals):
        marginals = list(marginals)
        if not marginals:
            raise ConfigError("need at least one marginal")
        for m in marginals:
            if getattr(m, "dim", None) != 1:
                raise ConfigError("marginals must be one-dimensional priors")
        self.marginals = marginals
        self.dim = len(marginals)

    def logpdf(self, theta) -> float:
        t = np.atleast_1d(np.asarray(theta, dtype=float))
        if t.size != self.dim:
            raise ConfigError(f"expected {self.dim} coordinates, got {t.size}")
        return float(sum(m.logpdf(t[i : i + 1]) for i, m in enumerate(self.marginals)))

    def sample(self, gen: np.random.Generator) -> np.ndarray:
        return np.concatenate([m.sample(gen) for m in self.marginals])


class FlatPrior:
    """Improper flat prior: log density 0 everywhere.  Not samplable."""

    def __init__(self, dim: int):
        if dim < 1:
            raise ConfigError("dim must be >= 1")
        self.dim = int(dim)

    def logpdf(self, theta) -> float:
        return 0.0

    def sample(self, gen):
        raise ConfigError("flat prior is improper and cannot be sampled")


def prior_from_config(cfg: dict):
    """Build a prior from a JSON-style config dict (see the CLI docs)."""
    if not isinstance(cfg, dict) or "type" not in cfg:
        raise ConfigError("prior config must be a dict with a 'type' key")
    kind = cfg["type"]
    if kind == "uniform":
        return UniformBoxPrior(cfg["lower"], cfg["upper"])
    if kind == "normal":
        return NormalPrior(cfg["mean"], cfg["sd"])
    if kind == "flat":
        return FlatPrior(int(cfg["dim"]))
    if kind == "product":
        return ProductPrior([prior_from_config(c) for c in cfg["marginals"]])
    raise ConfigError(f"unknown prior type {kind!r}")
