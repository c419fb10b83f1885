"""Posterior sampling with empirical-likelihood weights.

``run_bcel`` is plain importance sampling from the prior with the profile
empirical likelihood (or its tilted variant) as the unnormalized weight;
``run_bcel_resampled`` adds a multinomial resampling step; and
``run_bcel_amis`` is the adaptive multiple importance sampling variant that
fits multivariate Student-t3 proposals to the accumulated weighted sample
generation by generation and retrospectively re-weights everything against
the proposal mixture.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .empirical_likelihood import betel_solve_values, constraint_matrix, el_solve_values
from .errors import ConfigError, DegenerateSampleError
from .rng import RngStream, ScratchRng
from .special import MvtStudentT3, mvt3_logpdf_many, mvt3_sample
from .weights import WeightedSample, multinomial_resample, weighted_moments

__all__ = ["BcelConfig", "AmisConfig", "el_log_weight", "run_bcel", "run_bcel_resampled", "run_bcel_amis"]


@dataclass
class BcelConfig:
    """Settings for the prior importance sampler.

    ``constraint`` is a per-observation estimating function h(y, theta);
    ``flavor`` selects the profile EL weight exp(-neg2llr / 2) or the
    exponentially tilted weight ("betel").
    """

    m_draws: int
    prior: object
    constraint: object
    flavor: str = "el"
    resample_count: int | None = None

    def __post_init__(self):
        if self.m_draws < 2:
            raise ConfigError("m_draws must be >= 2")
        if self.flavor not in ("el", "betel"):
            raise ConfigError(f"unknown likelihood flavor {self.flavor!r}")


@dataclass
class AmisConfig(BcelConfig):
    """BcelConfig plus the generation count and proposal-fit safeguards.

    ``mixture`` selects the importance-mixture denominator: "as_printed"
    uses the proposals of generations 1..t-1 (the prior counts as the
    first proposal), "full" additionally includes the current generation's
    proposal.  ``jitter`` is added to a singular fitted covariance once; by
    default it is 1e-8 * trace(cov) / p.
    """

    generations: int = 2
    jitter: float | None = None
    mixture: str = "as_printed"

    def __post_init__(self):
        super().__post_init__()
        if self.generations < 1:
            raise ConfigError("generations must be >= 1")
        if self.jitter is not None and self.jitter < 0:
            raise ConfigError("jitter must be >= 0")
        if self.mixture not in ("as_printed", "full"):
            raise ConfigError(f"unknown mixture rule {self.mixture!r}")


def el_log_weight(data, theta, h, flavor: str = "el") -> float:
    """Log importance weight of theta: the EL ratio or the tilted likelihood.

    For the "el" flavor this is -neg2llr/2, i.e. log prod(n p_i), which is
    the empirical likelihood up to the constant n^n that self-normalization
    cancels.  Infeasible points get -inf (weight exactly zero).
    """
    H = constraint_matrix(data, theta, h)
    if flavor == "el":
        res = el_solve_values(H)
        return -0.5 * res.neg2llr if res.converged else -np.inf
    if flavor == "betel":
        log_lik, *_ = betel_solve_values(H)
        return log_lik
    raise ConfigError(f"unknown likelihood flavor {flavor!r}")


def _prior_draws(config, rng: RngStream, generation: int):
    """Generation draws from the prior; point i uses stream (generation, i)."""
    scratch = ScratchRng()
    points = np.empty((config.m_draws, config.prior.dim))
    for i in range(config.m_draws):
        points[i] = config.prior.sample(scratch.for_stream(rng.substream(generation, i)))
    return points


def _log_el_weights(data, points, config):
    lw = np.empty(points.shape[0])
    for i, theta in enumerate(points):
        lw[i] = el_log_weight(data, theta, config.constraint, config.flavor)
    return lw


def run_bcel(data, config: BcelConfig, rng: RngStream) -> WeightedSample:
    """Prior importance sampling with empirical-likelihood weights.

    Draws M points from the prior and weights each by its EL value at the
    data; infeasible draws carry weight zero.  Raises if every draw is
    infeasible (the constraint never brackets zero under the prior).
    """
    points = _prior_draws(config, rng, generation=1)
    log_w = _log_el_weights(data, points, config)
    if not np.any(log_w > -np.inf):
        raise DegenerateSampleError(
            "all prior draws have zero EL weight; widen the constraint or increase m_draws"
        )
    return WeightedSample(points, log_w, np.ones(config.m_draws, dtype=int))


def run_bcel_resampled(data, config: BcelConfig, rng: RngStream) -> np.ndarray:
    """Importance sampling followed by multinomial resampling.

    Returns ``resample_count`` (default M) equal-weight posterior draws.
    """
    sample = run_bcel(data, config, rng)
    if sample.ess() < 2.0:
        raise DegenerateSampleError("weighted sample has ESS < 2; resampling would collapse")
    count = config.resample_count or config.m_draws
    return multinomial_resample(sample, count, rng.substream(0).generator())


# Stream id for proposal-generation draws sits alongside the per-generation
# point streams used by _prior_draws (generations are 1-based).
def _fit_proposal(sample: WeightedSample, config: AmisConfig) -> MvtStudentT3:
    mean, cov, singular = weighted_moments(sample)
    if singular:
        p = cov.shape[0]
        eps = config.jitter if config.jitter is not None else 1e-8 * np.trace(cov) / p
        cov = cov + eps * np.eye(p)
        try:
            return MvtStudentT3(mean, cov)
        except Exception as exc:
            raise DegenerateSampleError(f"proposal covariance is singular after jitter: {exc}") from exc
    return MvtStudentT3(mean, cov)


def run_bcel_amis(data, config: AmisConfig, rng: RngStream) -> WeightedSample:
    """Adaptive multiple importance sampling with EL weights.

    Generation 1 reproduces :func:`run_bcel` bit for bit (same streams).
    Each later generation t fits a Student-t3 proposal to all previously
    drawn points under their current weights, draws M new points from it,
    and re-weights every point as prior * EL / mixture.  With the
    "as_printed" rule the mixture at stage t sums the proposals of
    generations 1..t-1 (prior first); with "full" it also includes q_t.

    Stops early with a warning if a generation's own weights have ESS < 2.
    """
    points = _prior_draws(config, rng, generation=1)
    log_el = _log_el_weights(data, points, config)
    if not np.any(log_el > -np.inf):
        raise DegenerateSampleError(
            "all prior draws have zero EL weight; widen the constraint or increase m_draws"
        )
    m = config.m_draws
    generations = np.ones(m, dtype=int)
    log_prior = np.array([config.prior.logpdf(t) for t in points])
    log_w = log_el.copy()  # generation-1 weights: plain EL values
    proposals: list[MvtStudentT3] = []

    def mixture_log_density(pts, stage):
        # components: prior (q_1) and fitted proposals q_2..q_last, where
        # last = stage-1 ("as_printed") or stage ("full")
        comps = [np.array([config.prior.logpdf(t) for t in pts])]
        last = stage - 1 if config.mixture == "as_printed" else stage
        for q in proposals[: last - 1]:
            comps.append(mvt3_logpdf_many(pts, q))
        return logsumexp(np.vstack(comps), axis=0)

    for stage in range(2, config.generations + 1):
        current = WeightedSample(points, log_w, generations)
        proposal = _fit_proposal(current, config)
        proposals.append(proposal)
        scratch = ScratchRng()
        new_points = np.empty((m, config.prior.dim))
        for i in range(m):
            new_points[i] = mvt3_sample(proposal, scratch.for_stream(rng.substream(stage, i)))
        new_log_el = _log_el_weights(data, new_points, config)
        new_log_prior = np.array([config.prior.logpdf(t) for t in new_points])

        points = np.vstack([points, new_points])
        log_el = np.concatenate([log_el, new_log_el])
        log_prior = np.concatenate([log_prior, new_log_prior])
        generations = np.concatenate([generations, np.full(m, stage, dtype=int)])

        log_mix = mixture_log_density(points, stage)
        with np.errstate(invalid="ignore"):
            log_w = log_prior + log_el - log_mix
        log_w[np.isnan(log_w)] = -np.inf

        new_w = log_w[-m:]
        if not np.any(new_w > -np.inf) or WeightedSample(new_points, new_w).ess() < 2.0:
            warnings.warn(
                f"AMIS generation {stage} is degenerate (ESS < 2); stopping early",
                RuntimeWarning,
                stacklevel=2,
            )
            break

    return WeightedSample(points, log_w, generations)
