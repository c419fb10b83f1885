"""Synthetic likelihood: moment estimation and normal-density estimators.

The summary statistic s | theta is approximated as multivariate normal with
moments (mu_n, sigma_n) estimated from n simulator replicates.  Two density
estimators are provided: the plug-in normal density, and an exactly unbiased
estimator built from the same moments.  The unbiased estimator is a mixture
of a discrete and a continuous random variable: it is identically zero with
positive probability, signalled by the distinguished :data:`ZERO_MASS` value
rather than a -inf float so samplers can branch on it explicitly.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Protocol, runtime_checkable

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import gammaln

from .errors import (
    ConfigError,
    NoEstimateError,
    NotPositiveDefiniteError,
    SimulationError,
)
from .rng import RngStream, ScratchRng

__all__ = [
    "ZERO_MASS",
    "is_zero_mass",
    "SimulatorModel",
    "SyntheticLikelihoodFit",
    "fit_moments",
    "sl_logdensity",
    "ghurye_olkin_log_unbiased",
    "max_synthetic_likelihood",
    "tune_n_diagnostic",
    "TuneRow",
]

_LOG_2PI = float(np.log(2.0 * np.pi))


class _ZeroMass:
    """Singleton marking a density estimate that is identically zero."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "ZERO_MASS"

    def __reduce__(self):
        return (_ZeroMass, ())


ZERO_MASS = _ZeroMass()


def is_zero_mass(value) -> bool:
    return value is ZERO_MASS


@runtime_checkable
class SimulatorModel(Protocol):
    """Contract for simulators: one summary vector per draw.

    ``simulate(theta, gen)`` must return a length-``summary_dim`` vector
    drawn from p(s | theta) using only the supplied generator, so that
    replicates on independent streams are i.i.d.
    """

    param_dim: int
    summary_dim: int

    def simulate(self, theta: np.ndarray, gen: np.random.Generator) -> np.ndarray: ...


@dataclass
class SyntheticLikelihoodFit:
    """Empirical moments (mu_n, sigma_n) of n simulated summaries."""

    mu_n: np.ndarray
    sigma_n: np.ndarray
    n: int

    def __post_init__(self):
        self.mu_n = np.atleast_1d(np.asarray(self.mu_n, dtype=float))
        self.sigma_n = np.atleast_2d(np.asarray(self.sigma_n, dtype=float))
        d = self.mu_n.size
        if self.sigma_n.shape != (d, d):
            raise ConfigError("sigma_n shape must match mu_n length")
        if self.n < 2:
            raise ConfigError("need n >= 2 replicates")
        if np.max(np.abs(self.sigma_n - self.sigma_n.T)) > 1e-10:
            raise ConfigError("sigma_n is not symmetric within 1e-10")

    @property
    def dim(self) -> int:
        return self.mu_n.size

    @property
    def m_n(self) -> np.ndarray:
        """Scatter matrix (n - 1) * sigma_n."""
        return (self.n - 1) * self.sigma_n


def _simulate_block(model, theta, rng, indices, out):
    scratch = ScratchRng()
    for j in indices:
        try:
            s = model.simulate(theta, scratch.for_stream(rng.substream(j)))
        except Exception as exc:  # noqa: BLE001 - annotate with replicate index
            raise SimulationError(f"simulator failed on replicate {j}: {exc}", replicate=j) from exc
        out[j] = np.asarray(s, dtype=float)


def fit_moments(
    model: SimulatorModel,
    theta,
    n: int,
    rng: RngStream,
    threads: int = 1,
) -> SyntheticLikelihoodFit:
    """Estimate (mu_n, sigma_n) from n simulator replicates at theta.

    mu_n is the replicate mean and sigma_n the unbiased (1/(n-1)) covariance.
    Replicate j draws from ``rng.substream(j)``, so results are identical for
    any ``threads`` value and any execution order.
    """
    if n < 2:
        raise ConfigError("need n >= 2 replicates")
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    summaries = np.empty((n, model.summary_dim), dtype=float)
    if threads > 1:
        chunks = np.array_split(np.arange(n), threads)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [
                pool.submit(_simulate_block, model, theta, rng, chunk, summaries)
                for chunk in chunks
                if chunk.size
            ]
            for f in futures:
                f.result()
    else:
        _simulate_block(model, theta, rng, range(n), summaries)
    if not np.all(np.isfinite(summaries)):
        bad = int(np.where(~np.isfinite(summaries).all(axis=1))[0][0])
        raise SimulationError(f"non-finite summary from replicate {bad}", replicate=bad)
    mu = summaries.mean(axis=0)
    xc = summaries - mu
    sigma = xc.T @ xc / (n - 1)
    sigma = 0.5 * (sigma + sigma.T)
    return SyntheticLikelihoodFit(mu, sigma, n)


def _chol_or_raise(a: np.ndarray, what: str) -> np.ndarray:
    try:
        return np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(f"{what} is not positive definite") from exc


def sl_logdensity(s_obs, fit: SyntheticLikelihoodFit) -> float:
    """Plug-in log synthetic likelihood: log N(s_obs; mu_n, sigma_n)."""
    s = np.atleast_1d(np.asarray(s_obs, dtype=float))
    d = fit.dim
    if s.shape != (d,):
        raise ConfigError(f"s_obs must have length {d}")
    L = _chol_or_raise(fit.sigma_n, "sigma_n")
    z = solve_triangular(L, s - fit.mu_n, lower=True, check_finite=False)
    log_det = 2.0 * float(np.sum(np.log(np.diag(L))))
    return float(-0.5 * d * _LOG_2PI - 0.5 * log_det - 0.5 * (z @ z))


def _log_c_ratio(d: int, n: int) -> float:
    # log c(d, n-2) - log c(d, n-1); only the Gamma-ratio and a log-2 term
    # survive, avoiding overflow for large n.
    i = np.arange(1, d + 1)
    return float(0.5 * d * np.log(2.0) + np.sum(gammaln((n - i) / 2.0) - gammaln((n - 1 - i) / 2.0)))


def ghurye_olkin_log_unbiased(s_obs, fit: SyntheticLikelihoodFit):
    """Log of the exactly unbiased normal-density estimator, or ZERO_MASS.

    Requires n > d + 3 and a positive-definite scatter matrix.  Returns
    :data:`ZERO_MASS` when the rank-one downdate of the scatter matrix loses
    positive definiteness, which happens with positive probability (the
    estimator is a mixed discrete-continuous random variable).
    """
    s = np.atleast_1d(np.asarray(s_obs, dtype=float))
    d = fit.dim
    n = fit.n
    if s.shape != (d,):
        raise ConfigError(f"s_obs must have length {d}")
    if n <= d + 3:
        raise ConfigError(f"unbiased estimator requires n > d + 3 (n={n}, d={d})")
    m_n = fit.m_n
    L = _chol_or_raise(m_n, "scatter matrix")
    log_det_m = 2.0 * float(np.sum(np.log(np.diag(L))))
    diff = s - fit.mu_n
    a = m_n - np.outer(diff, diff) / (1.0 - 1.0 / n)
    a = 0.5 * (a + a.T)
    try:
        La = np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        return ZERO_MASS
    log_det_a = 2.0 * float(np.sum(np.log(np.diag(La))))
    return float(
        -0.5 * d * _LOG_2PI
        + _log_c_ratio(d, n)
        - 0.5 * d * np.log1p(-1.0 / n)
        - 0.5 * (n - d - 2) * log_det_m
        + 0.5 * (n - d - 3) * log_det_a
    )


def estimate_log_sl(model, theta, s_obs, n, rng, estimator="plugin", threads=1):
    """Simulate a fit at theta and score s_obs under the chosen estimator.

    Returns a float, +inf for an exact deterministic match (all replicates
    equal to s_obs, the limiting case of a noise-free simulator), or
    ZERO_MASS for the unbiased estimator's zero branch.  Raises
    NotPositiveDefiniteError when the moments are degenerate.
    """
    fit = fit_moments(model, theta, n, rng, threads=threads)
    s = np.atleast_1d(np.asarray(s_obs, dtype=float))
    if not np.any(fit.sigma_n) and np.array_equal(fit.mu_n, s):
        return np.inf
    if estimator == "plugin":
        return sl_logdensity(s, fit)
    if estimator == "unbiased":
        return ghurye_olkin_log_unbiased(s, fit)
    raise ConfigError(f"unknown estimator {estimator!r}")


def max_synthetic_likelihood(model, s_obs, prior, config, rng) -> np.ndarray:
    """Point estimate: the chain state with the highest estimated log SL.

    Runs the Metropolis-Hastings explorer from :mod:`synel.mcmc` and returns
    the visited theta whose (stochastic) log synthetic likelihood estimate
    was largest.  States where the likelihood was never estimable do not
    count; if no state was estimable a NoEstimateError is raised.
    """
    from .mcmc import run_mcmc_bsl

    trace = run_mcmc_bsl(model, s_obs, prior, config, rng, allow_degenerate_start=True)
    best = int(np.argmax(trace.log_sl))
    if trace.log_sl[best] == -np.inf:
        raise NoEstimateError("no visited state had an estimable synthetic likelihood")
    return trace.states[best].copy()


@dataclass
class TuneRow:
    n: int
    sd_log_sl: float


@dataclass
class TuneResult:
    rows: list[TuneRow] = field(default_factory=list)
    recommended_n: int | None = None

    def __iter__(self):
        return iter(self.rows)


# Standard-deviation target for the estimated log SL; replicate counts at or
# below this noise level give an efficient sampler.
LOG_SL_SD_TARGET = 2.0


def tune_n_diagnostic(
    model,
    s_obs,
    theta_ref,
    candidate_ns,
    replications: int,
    rng: RngStream,
    estimator: str = "plugin",
) -> TuneResult:
    """Estimate the noise of the log SL estimate for each candidate n.

    For each n the log SL at ``theta_ref`` is re-estimated ``replications``
    times on fresh streams and the sample standard deviation reported.  The
    recommended n is the smallest whose sd is at most LOG_SL_SD_TARGET.
    Non-estimable replications enter as -inf; a constant column (including
    the all--inf case of a noise-free simulator) has sd 0 by convention.
    """
    if replications < 2:
        raise ConfigError("need at least 2 replications")
    result = TuneResult()
    for ni, n in enumerate(candidate_ns):
        vals = np.empty(replications)
        for r in range(replications):
            try:
                v = estimate_log_sl(model, theta_ref, s_obs, n, rng.substream(ni, r), estimator)
            except NotPositiveDefiniteError:
                v = -np.inf
            vals[r] = -np.inf if is_zero_mass(v) else v
        if np.all(vals == vals[0]):
            sd = 0.0
        elif not np.all(np.isfinite(vals)):
            sd = np.inf
        else:
            sd = float(np.std(vals, ddof=1))
        result.rows.append(TuneRow(n=int(n), sd_log_sl=sd))
        if result.recommended_n is None and sd <= LOG_SL_SD_TARGET:
            result.recommended_n = int(n)
    return result
