"""Scalar special functions and the multivariate Student-t3 distribution."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular
from scipy.optimize import brentq
from scipy.special import gammaincc, gammaln

from .errors import ConfigError, NotPositiveDefiniteError

__all__ = [
    "chi2_sf",
    "chi2_upper_quantile",
    "MvtStudentT3",
    "mvt3_logpdf",
    "mvt3_logpdf_many",
    "mvt3_sample",
]

_LOG_PI = float(np.log(np.pi))


def chi2_sf(x: float, dof: int) -> float:
    """Chi-square survival function 1 - F(x) via the regularized incomplete gamma.

    Strictly decreasing in x for fixed dof; equals 1 at x = 0.
    """
    if dof <= 0:
        raise ConfigError("dof must be a positive integer")
    if not np.isfinite(x):
        raise ConfigError("x must be finite")
    if x < 0:
        raise ConfigError("x must be >= 0")
    return float(gammaincc(dof / 2.0, x / 2.0))


def chi2_upper_quantile(alpha: float, dof: int) -> float:
    """The x with chi2_sf(x, dof) == alpha (upper-alpha quantile)."""
    if not 0.0 < alpha < 1.0:
        raise ConfigError("alpha must lie in (0, 1)")
    hi = 1.0
    while chi2_sf(hi, dof) > alpha:
        hi *= 2.0
        if hi > 1e8:
            raise ConfigError("quantile search failed to bracket")
    return float(brentq(lambda x: chi2_sf(x, dof) - alpha, 0.0, hi, xtol=1e-12))


@dataclass
class MvtStudentT3:
    """Multivariate Student-t with 3 degrees of freedom.

    ``scale`` must be symmetric within 1e-10 and Cholesky-factorizable.
    """

    mean: np.ndarray
    scale: np.ndarray

    DOF = 3.0

    def __post_init__(self):
        self.mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        self.scale = np.atleast_2d(np.asarray(self.scale, dtype=float))
        p = self.mean.size
        if self.scale.shape != (p, p):
            raise ConfigError("scale shape must match mean length")
        if np.max(np.abs(self.scale - self.scale.T)) > 1e-10:
            raise NotPositiveDefiniteError("scale matrix is not symmetric within 1e-10")
        try:
            self._chol = np.linalg.cholesky(self.scale)
        except np.linalg.LinAlgError as exc:
            raise NotPositiveDefiniteError("scale matrix is not positive definite") from exc

    @property
    def dim(self) -> int:
        return self.mean.size


def mvt3_logpdf(x, dist: MvtStudentT3) -> float:
    """Log density of the t3 distribution at x."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    p = dist.dim
    if x.shape != (p,):
        raise ConfigError(f"x must have length {p}")
    nu = MvtStudentT3.DOF
    L = dist._chol
    z = solve_triangular(L, x - dist.mean, lower=True, check_finite=False)
    quad = float(z @ z)
    log_det = 2.0 * float(np.sum(np.log(np.diag(L))))
    return float(
        gammaln((nu + p) / 2.0)
        - gammaln(nu / 2.0)
        - 0.5 * p * (np.log(nu) + _LOG_PI)
        - 0.5 * log_det
        - 0.5 * (nu + p) * np.log1p(quad / nu)
    )


def mvt3_logpdf_many(x: np.ndarray, dist: MvtStudentT3) -> np.ndarray:
    """Vectorized :func:`mvt3_logpdf` over the rows of an (m, p) array."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    p = dist.dim
    if x.shape[1] != p:
        raise ConfigError(f"points must have {p} columns")
    nu = MvtStudentT3.DOF
    L = dist._chol
    z = solve_triangular(L, (x - dist.mean).T, lower=True, check_finite=False)
    quad = np.sum(z * z, axis=0)
    log_det = 2.0 * float(np.sum(np.log(np.diag(L))))
    const = (
        gammaln((nu + p) / 2.0)
        - gammaln(nu / 2.0)
        - 0.5 * p * (np.log(nu) + _LOG_PI)
        - 0.5 * log_det
    )
    return const - 0.5 * (nu + p) * np.log1p(quad / nu)


def mvt3_sample(dist: MvtStudentT3, gen: np.random.Generator) -> np.ndarray:
    """One draw from the t3 distribution.

    Consumes, in order: ``dim`` standard normals, then one chi-square(3)
    variate.  The order is part of the reproducibility contract.
    """
    z = gen.standard_normal(dist.dim)
    u = gen.chisquare(MvtStudentT3.DOF)
    return dist.mean + (dist._chol @ z) * np.sqrt(MvtStudentT3.DOF / u)
