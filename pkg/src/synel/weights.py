"""Weighted parameter samples: ESS, normalization, resampling, moments.

Importance weights are carried in log space throughout; they are
exponentiated only at the summary/export boundary.  Normalization uses
log-sum-exp so that weights like exp(-700) survive.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import InvalidWeightsError
from .rng import RngStream, as_stream

__all__ = ["WeightedSample", "ess", "multinomial_resample", "weighted_moments"]


def ess(weights) -> float:
    """Effective sample size of a nonnegative weight vector.

    ESS = 1 / sum_i(w_i / sum_j w_j)^2.  Lies in [1, len(weights)] and is
    invariant to rescaling all weights by a positive constant.
    """
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise InvalidWeightsError("weights must be a nonempty vector")
    if not np.all(np.isfinite(w)):
        raise InvalidWeightsError("weights must be finite")
    if np.any(w < 0):
        raise InvalidWeightsError("weights must be nonnegative")
    total = w.sum()
    if total <= 0:
        raise InvalidWeightsError("at least one weight must be positive")
    wn = w / total
    return float(1.0 / np.sum(wn * wn))


def _log_ess(log_weights: np.ndarray) -> float:
    return float(np.exp(2.0 * logsumexp(log_weights) - logsumexp(2.0 * log_weights)))


@dataclass
class WeightedSample:
    """Points in parameter space with unnormalized weights and generation tags.

    ``points`` has shape (M, p); ``log_weights`` shape (M,), entries in
    [-inf, inf) with at least one finite entry required before any
    normalization-based service is used; ``generations`` tags each point
    with the sampler generation that produced it (1-based).
    """

    points: np.ndarray
    log_weights: np.ndarray
    generations: np.ndarray = field(default=None)

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        self.log_weights = np.asarray(self.log_weights, dtype=float)
        if self.log_weights.ndim != 1 or self.points.shape[0] != self.log_weights.size:
            raise InvalidWeightsError("points and log_weights lengths differ")
        if np.any(np.isnan(self.log_weights)) or np.any(self.log_weights == np.inf):
            raise InvalidWeightsError("log weights must be in [-inf, inf)")
        if self.generations is None:
            self.generations = np.ones(self.size, dtype=int)
        else:
            self.generations = np.asarray(self.generations, dtype=int)
            if self.generations.shape != (self.size,):
                raise InvalidWeightsError("generation tags length differs from points")

    @classmethod
    def from_weights(cls, points, weights, generations=None) -> "WeightedSample":
        w = np.asarray(weights, dtype=float)
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise InvalidWeightsError("weights must be finite and nonnegative")
        with np.errstate(divide="ignore"):
            lw = np.log(w)
        return cls(points, lw, generations)

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def weights(self) -> np.ndarray:
        """Unnormalized weights (may underflow to 0 for very negative logs)."""
        return np.exp(self.log_weights)

    def _require_mass(self):
        if not np.any(self.log_weights > -np.inf):
            raise InvalidWeightsError("all weights are zero")

    def normalized_weights(self) -> np.ndarray:
        """Weights normalized to sum to 1 (within 1e-12), via log-sum-exp."""
        self._require_mass()
        return np.exp(self.log_weights - logsumexp(self.log_weights))

    def ess(self) -> float:
        self._require_mass()
        return _log_ess(self.log_weights)

    def resample(self, count: int, rng) -> np.ndarray:
        return multinomial_resample(self, count, rng)


def multinomial_resample(sample: WeightedSample, count: int, rng) -> np.ndarray:
    """Draw ``count`` points i.i.d. from the normalized weight distribution.

    Output rows are equal-weight draws; a fixed ``rng`` stream reproduces the
    identical index sequence on rerun.
    """
    if count < 1:
        raise InvalidWeightsError("count must be >= 1")
    wn = sample.normalized_weights()
    gen = as_stream(rng).generator() if isinstance(rng, (int, RngStream)) else rng
    idx = gen.choice(sample.size, size=count, replace=True, p=wn)
    return sample.points[idx]


def weighted_moments(sample: WeightedSample):
    """Self-normalized weighted mean and covariance of a sample.

    Returns ``(mean, cov, singular)`` where the covariance uses the
    normalized-weight estimator sum_i w~_i (x_i - m)(x_i - m)^T (weights sum
    to one; no small-sample correction) and ``singular`` flags a covariance
    that is not positive definite.  Callers decide how to regularize;
    nothing is silently jittered here.
    """
    wn = sample.normalized_weights()
    x = sample.points
    mean = wn @ x
    xc = x - mean
    cov = (wn[:, None] * xc).T @ xc
    cov = 0.5 * (cov + cov.T)
    try:
        np.linalg.cholesky(cov)
        singular = False
    except np.linalg.LinAlgError:
        singular = True
    return mean, cov, singular
