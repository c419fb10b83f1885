"""Random-walk Metropolis-Hastings on the synthetic-likelihood posterior.

Each iteration re-simulates n replicates at the proposed point and accepts
with the usual ratio computed in log space.  The current state's estimated
log likelihood is carried forward, never re-estimated, which makes this a
noisy ("pseudo-marginal") chain: with the plug-in estimator the target
depends on n, while the exactly unbiased estimator targets the ideal normal
approximation regardless of n.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from .errors import ConfigError, DegenerateSampleError, NotPositiveDefiniteError
from .rng import RngStream
from .synthetic_likelihood import ZERO_MASS, estimate_log_sl, is_zero_mass

__all__ = ["MCMCConfig", "MCMCTrace", "run_mcmc_bsl", "normalized_ess"]

# Normalized ESS = ESS / (total simulations) * this scalar.  The multiplier
# is arbitrary and only makes the numbers readable; comparisons are
# meaningful within this package only.
NORMALIZED_ESS_SCALE = 1.0e6

# Stream ids directly under the sampler's root stream.
_CHAIN = 0
_SIM = 1


@dataclass
class MCMCConfig:
    """Random-walk sampler settings.

    ``proposal_cov`` may be a full p x p covariance, a scalar variance, or
    None for the default 0.1^2 * I.  ``estimator`` selects the plug-in
    ("plugin") or exactly unbiased ("unbiased") likelihood estimate.
    """

    iterations: int
    initial: np.ndarray
    n: int
    proposal_cov: np.ndarray | float | None = None
    estimator: str = "plugin"
    burn_in: int = 0
    threads: int = 1

    def __post_init__(self):
        self.initial = np.atleast_1d(np.asarray(self.initial, dtype=float))
        if self.iterations < 1:
            raise ConfigError("iterations must be >= 1")
        if self.n < 2:
            raise ConfigError("n must be >= 2")
        if self.estimator not in ("plugin", "unbiased"):
            raise ConfigError(f"unknown estimator {self.estimator!r}")
        if not 0 <= self.burn_in <= self.iterations:
            raise ConfigError("burn_in must lie in [0, iterations]")
        p = self.initial.size
        if self.proposal_cov is None:
            cov = 0.01 * np.eye(p)
        elif np.isscalar(self.proposal_cov):
            cov = float(self.proposal_cov) * np.eye(p)
        else:
            cov = np.atleast_2d(np.asarray(self.proposal_cov, dtype=float))
        if cov.shape != (p, p):
            raise ConfigError("proposal covariance shape must match initial point")
        try:
            self._prop_chol = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError as exc:
            raise ConfigError("proposal covariance must be positive definite") from exc
        self.proposal_cov = cov
        self._prop_chol_inv = solve_triangular(self._prop_chol, np.eye(p), lower=True)
        self._prop_log_norm = float(
            -0.5 * p * np.log(2.0 * np.pi) - np.sum(np.log(np.diag(self._prop_chol)))
        )


@dataclass
class MCMCTrace:
    """Chain output: states, per-state log SL, accept flags.

    ``log_sl[i]`` is the estimate carried by ``states[i]``; -inf marks a
    zero-mass estimate (unbiased estimator only) and +inf the exact
    deterministic-match limit.  ``n_simulations`` counts simulator calls
    actually performed (auto-rejected proposals skip simulation).
    """

    states: np.ndarray
    log_sl: np.ndarray
    accepted: np.ndarray
    burn_in: int = 0
    n_simulations: int = 0

    @property
    def acceptance_rate(self) -> float:
        return float(np.mean(self.accepted))

    @property
    def iterations(self) -> int:
        return self.accepted.size

    def post_burn_in(self) -> np.ndarray:
        return self.states[self.burn_in :]

    def to_csv(self, path) -> None:
        """One row per state: iteration, theta coords, logSL, accepted flag."""
        p = self.states.shape[1]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["iteration", *[f"theta_{j}" for j in range(p)], "log_sl", "accepted"])
            for i in range(self.states.shape[0]):
                acc = "" if i == 0 else str(int(self.accepted[i - 1]))
                writer.writerow(
                    [i, *[repr(float(v)) for v in self.states[i]], repr(float(self.log_sl[i])), acc]
                )


def _proposal_logpdf(x, mean, config):
    z = config._prop_chol_inv @ (x - mean)
    return config._prop_log_norm - 0.5 * float(z @ z)


def run_mcmc_bsl(
    model,
    s_obs,
    prior,
    config: MCMCConfig,
    rng: RngStream,
    allow_degenerate_start: bool = False,
) -> MCMCTrace:
    """Sample the synthetic-likelihood posterior with a Gaussian random walk.

    The proposal is symmetric; the q-ratio is still evaluated and folded into
    the log acceptance ratio (it cancels exactly in floating point).  Within
    iteration i the chain stream supplies the proposal draw, the replicate
    simulations run on streams keyed by (i, replicate), and the acceptance
    uniform is drawn last from the chain stream.  Proposals outside the prior
    support or with non-estimable moments are rejected without simulation or
    with a rejected flag respectively; a zero-mass current state accepts any
    estimable proposal.

    ``allow_degenerate_start`` turns a non-estimable initial state into a
    -inf score instead of an error (used by the point-estimate search).
    """
    theta = config.initial.copy()
    s = np.atleast_1d(np.asarray(s_obs, dtype=float))
    if s.shape != (model.summary_dim,):
        raise ConfigError("s_obs length must equal the model summary dimension")
    if theta.size != model.param_dim:
        raise ConfigError("initial point length must equal the model parameter dimension")
    lp_cur = prior.logpdf(theta)
    if lp_cur == -np.inf:
        raise ConfigError("initial point lies outside the prior support")

    chain_gen = rng.substream(_CHAIN).generator()
    n_sims = 0
    try:
        cur = estimate_log_sl(
            model, theta, s, config.n, rng.substream(_SIM, 0), config.estimator, config.threads
        )
        n_sims += config.n
    except NotPositiveDefiniteError:
        if not allow_degenerate_start:
            raise
        cur = -np.inf

    T = config.iterations
    p = theta.size
    states = np.empty((T + 1, p))
    log_sl = np.empty(T + 1)
    accepted = np.zeros(T, dtype=bool)
    states[0] = theta
    log_sl[0] = -np.inf if is_zero_mass(cur) else cur
    chol = config._prop_chol

    for i in range(1, T + 1):
        step = chol @ chain_gen.standard_normal(p)
        proposal = theta + step
        lp_prop = prior.logpdf(proposal)
        accept = False
        prop_val = None
        if lp_prop > -np.inf:
            try:
                prop_val = estimate_log_sl(
                    model, proposal, s, config.n, rng.substream(_SIM, i), config.estimator, config.threads
                )
                n_sims += config.n
            except NotPositiveDefiniteError:
                prop_val = None
        log_u = np.log(chain_gen.uniform())
        if prop_val is not None and not is_zero_mass(prop_val):
            cur_dead = is_zero_mass(cur) or cur == -np.inf
            if cur_dead:
                accept = True
            else:
                log_q_ratio = _proposal_logpdf(theta, proposal, config) - _proposal_logpdf(
                    proposal, theta, config
                )
                if prop_val == np.inf and cur == np.inf:
                    log_r = lp_prop - lp_cur  # two exact-match states: likelihoods tie
                else:
                    log_r = (prop_val + lp_prop) - (cur + lp_cur) + log_q_ratio
                accept = log_u < min(0.0, log_r)
        if accept:
            theta = proposal
            cur = prop_val
            lp_cur = lp_prop
        states[i] = theta
        log_sl[i] = -np.inf if is_zero_mass(cur) else cur
        accepted[i - 1] = accept

    return MCMCTrace(
        states=states,
        log_sl=log_sl,
        accepted=accepted,
        burn_in=config.burn_in,
        n_simulations=n_sims,
    )


def _autocorr_ess(x: np.ndarray) -> float:
    """ESS of one chain coordinate via Geyer's initial positive sequence."""
    n = x.size
    xc = x - x.mean()
    var = float(xc @ xc) / n
    if var == 0.0:
        raise DegenerateSampleError("trace coordinate is constant; ESS undefined")
    # FFT autocovariance, normalized to rho_0 = 1
    m = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(xc, m)
    acov = np.fft.irfft(f * np.conjugate(f), m)[:n].real / n
    rho = acov / acov[0]
    # pair sums Gamma_k = rho_{2k} + rho_{2k+1}; truncate at first negative
    tau = -1.0
    k = 0
    while 2 * k + 1 < n:
        gamma = rho[2 * k] + rho[2 * k + 1]
        if gamma <= 0.0:
            break
        tau += 2.0 * gamma
        k += 1
    tau = max(tau, 1.0)
    return float(n / tau)


def normalized_ess(trace: MCMCTrace, total_simulations: int) -> np.ndarray:
    """Per-parameter autocorrelation ESS per simulation, scaled for readability.

    Returns ESS_j / total_simulations * NORMALIZED_ESS_SCALE for each
    coordinate j of the post-burn-in trace.
    """
    x = trace.post_burn_in()
    if x.shape[0] < 100:
        raise ConfigError("need at least 100 states after burn-in")
    if total_simulations <= 0:
        raise ConfigError("total_simulations must be positive")
    out = np.array([_autocorr_ess(x[:, j]) for j in range(x.shape[1])])
    return out / total_simulations * NORMALIZED_ESS_SCALE
