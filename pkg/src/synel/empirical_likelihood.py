"""Empirical likelihood under moment constraints, and its tilted variant.

The profile problem maximizes prod(n p_i) over simplex weights subject to
sum_i p_i h(y_i, theta) = 0.  It is solved through the Lagrange dual: the
weights have the form p_i = 1 / (n (1 + lambda' h_i)) with lambda the
minimizer of the convex dual objective -sum_i log(1 + lambda' h_i).  The
pseudo-logarithm log*(z) (quadratic extension below 1/n) keeps the dual
defined for every lambda, so damped Newton iterations are globally safe.

Infeasibility (zero outside the convex hull of the constraint values) is a
result state, not an exception: ``neg2llr`` is +inf and ``converged`` is
False, which samplers map to weight zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar
from scipy.special import logsumexp

from .errors import ConfigError, DataError
from .special import chi2_sf, chi2_upper_quantile

__all__ = [
    "ELResult",
    "ELTestResult",
    "el_solve_values",
    "el_maximize",
    "el_test",
    "el_confint",
    "betel_logweight",
    "betel_solve_values",
]

# Convergence tolerance on the constraint residual ||sum_i p_i h_i||_inf and
# the damped-Newton iteration cap.
EL_TOL = 1e-8
EL_MAX_ITER = 50


@dataclass
class ELResult:
    """Solution of one profile-likelihood problem.

    ``weights`` is the maximizing simplex vector (None when infeasible),
    ``lam`` the Lagrange multiplier, ``neg2llr`` the -2 log likelihood
    ratio (-2 sum log(n p_i); +inf iff infeasible).
    """

    weights: np.ndarray | None
    lam: np.ndarray
    neg2llr: float
    converged: bool
    iterations: int


@dataclass
class ELTestResult:
    neg2llr: float
    p_value: float
    lam: np.ndarray
    weights: np.ndarray | None
    iterations: int
    feasible: bool


def _log_star(z: np.ndarray, eps: float) -> np.ndarray:
    out = np.empty_like(z)
    lo = z < eps
    zl = z[lo]
    out[lo] = np.log(eps) - 1.5 + 2.0 * zl / eps - 0.5 * (zl / eps) ** 2
    out[~lo] = np.log(z[~lo])
    return out


def _d_log_star(z: np.ndarray, eps: float) -> np.ndarray:
    out = np.empty_like(z)
    lo = z < eps
    out[lo] = 2.0 / eps - z[lo] / eps**2
    out[~lo] = 1.0 / z[~lo]
    return out


def _d2_log_star(z: np.ndarray, eps: float) -> np.ndarray:
    out = np.empty_like(z)
    lo = z < eps
    out[lo] = -1.0 / eps**2
    out[~lo] = -1.0 / z[~lo] ** 2
    return out


def _infeasible(lam, iterations) -> ELResult:
    return ELResult(weights=None, lam=lam, neg2llr=np.inf, converged=False, iterations=iterations)


def el_solve_values(h_values: np.ndarray) -> ELResult:
    """Solve the profile problem for precomputed constraint values.

    ``h_values`` has one row per observation and one column per constraint.
    This is the computational core behind :func:`el_maximize`; samplers that
    can build the constraint matrix in vectorized form call it directly.
    """
    H = np.atleast_2d(np.asarray(h_values, dtype=float))
    if H.ndim != 2:
        raise DataError("constraint values must form an (n, q) matrix")
    n, q = H.shape
    if not np.all(np.isfinite(H)):
        raise DataError("constraint values must be finite")
    if q >= n:
        raise ConfigError(f"need n > q (got n={n}, q={q})")

    if not np.any(H):
        # constraint identically satisfied: uniform weights, lambda = 0
        return ELResult(np.full(n, 1.0 / n), np.zeros(q), 0.0, True, 0)
    if q == 1:
        col = H[:, 0]
        if col.min() >= 0.0 or col.max() <= 0.0:
            return _infeasible(np.zeros(1), 0)

    eps = 1.0 / n
    lam = np.zeros(q)
    z = 1.0 + H @ lam

    def objective(zv):
        return -float(np.sum(_log_star(zv, eps)))

    def solution_if_converged(zv, lam_v, iters):
        # genuine optimum: weights interior, constraint met, AND weights on
        # the simplex (sum 1/(n z) = 1 holds at a true dual solution but
        # fails when an unbounded infeasible direction drives all z -> inf)
        if np.min(zv) * n <= 1.0 - 1e-9:
            return None
        inv_z = 1.0 / zv
        if float(np.max(np.abs(H.T @ inv_z))) / n >= EL_TOL:
            return None
        if abs(float(np.sum(inv_z)) / n - 1.0) > 1e-6:
            return None
        p = inv_z / n
        neg2llr = max(2.0 * float(np.sum(np.log(zv))), 0.0)
        return ELResult(p, lam_v, neg2llr, True, iters)

    f_cur = objective(z)
    for it in range(1, EL_MAX_ITER + 1):
        done = solution_if_converged(z, lam, it - 1)
        if done is not None:
            return done
        d1 = _d_log_star(z, eps)
        grad = -(H.T @ d1)
        w = -_d2_log_star(z, eps)
        hess = (H * w[:, None]).T @ H
        try:
            step = np.linalg.solve(hess, -grad)
        except np.linalg.LinAlgError:
            step, *_ = np.linalg.lstsq(hess, -grad, rcond=None)
        slope = float(grad @ step)
        if slope > 0:  # not a descent direction (degenerate Hessian); bail out
            step = -grad
            slope = -float(grad @ grad)
        t = 1.0
        for _ in range(40):
            lam_new = lam + t * step
            z_new = 1.0 + H @ lam_new
            f_new = objective(z_new)
            if f_new <= f_cur + 1e-4 * t * slope:
                break
            t *= 0.5
        else:
            return _infeasible(lam, it)
        lam, z, f_cur = lam_new, z_new, f_new

    done = solution_if_converged(z, lam, EL_MAX_ITER)
    return done if done is not None else _infeasible(lam, EL_MAX_ITER)


def constraint_matrix(data, theta, h) -> np.ndarray:
    """Evaluate h(y_i, theta) for every observation, as an (n, q) matrix."""
    rows = [np.atleast_1d(np.asarray(h(y, theta), dtype=float)) for y in data]
    H = np.vstack(rows)
    if not np.all(np.isfinite(H)):
        raise DataError("constraint function produced non-finite values")
    return H


def el_maximize(data, theta, h) -> ELResult:
    """Maximize the empirical likelihood of ``data`` under the constraint h.

    ``h(y, theta)`` returns the length-q estimating-function value for one
    observation; the profile is taken at the given theta.
    """
    return el_solve_values(constraint_matrix(data, theta, h))


def el_test(data, theta, h) -> ELTestResult:
    """-2 log likelihood ratio test of the constraint at theta.

    The p-value is the chi-square(q) survival function at the observed
    -2LLR (Wilks limit); an infeasible theta gets p-value 0.
    """
    H = constraint_matrix(data, theta, h)
    res = el_solve_values(H)
    q = H.shape[1]
    if not res.converged:
        return ELTestResult(np.inf, 0.0, res.lam, None, res.iterations, False)
    p_value = chi2_sf(res.neg2llr, q)
    return ELTestResult(res.neg2llr, p_value, res.lam, res.weights, res.iterations, True)


def el_confint(data, h, level: float = 0.05, bracket=None, center=None):
    """Profile-likelihood confidence interval for a scalar parameter.

    ``h(y, theta)`` must be scalar-valued and the -2LLR curve continuous and
    unimodal over the bracket (defaults to the observed data range, inside
    which the constraint can be feasible).  Returns the two crossings of the
    chi-square(1) upper-``level`` quantile, found by bisection on each side
    of the minimizing theta.
    """
    if not 0.0 < level < 1.0:
        raise ConfigError("level must lie in (0, 1)")
    data = np.asarray(data, dtype=float)
    if bracket is None:
        flat = data.reshape(-1)
        bracket = (float(flat.min()), float(flat.max()))
    lo, hi = map(float, bracket)
    if not lo < hi:
        raise ConfigError("bracket must satisfy lo < hi")
    threshold = chi2_upper_quantile(level, 1)

    big = 1e12

    def curve(t):
        r = el_maximize(data, t, h)
        return min(r.neg2llr, big)

    if center is None:
        opt = minimize_scalar(curve, bounds=(lo, hi), method="bounded", options={"xatol": 1e-10})
        center = float(opt.x)
    f_center = curve(center)
    if f_center >= threshold:
        raise DataError("no sub-threshold point found; -2LLR exceeds the quantile everywhere")

    pad = 1e-9 * (hi - lo)

    def crossing(a, b):
        fa = curve(a) - threshold
        fb = curve(b) - threshold
        if fa * fb > 0:
            # curve blows up at the hull boundary; the crossing hugs it
            return a if abs(fa) < abs(fb) else b
        return float(brentq(lambda t: curve(t) - threshold, a, b, xtol=1e-10))

    lower = crossing(lo + pad, center)
    upper = crossing(center, hi - pad)
    return lower, upper


def betel_solve_values(h_values: np.ndarray):
    """Exponentially tilted weights for precomputed constraint values.

    Solves min_lambda log sum_i exp(lambda' h_i); the maximum-entropy
    weights are p*_i proportional to exp(lambda' h_i) and satisfy
    sum_i p*_i h_i = 0.  Returns (log prod p*_i, lam, weights, converged,
    iterations); the log likelihood is -inf when no multiplier exists
    (convex-hull failure).
    """
    H = np.atleast_2d(np.asarray(h_values, dtype=float))
    n, q = H.shape
    if not np.all(np.isfinite(H)):
        raise DataError("constraint values must be finite")
    if q >= n:
        raise ConfigError(f"need n > q (got n={n}, q={q})")
    if not np.any(H):
        w = np.full(n, 1.0 / n)
        return -n * np.log(n), np.zeros(q), w, True, 0
    if q == 1:
        col = H[:, 0]
        if col.min() >= 0.0 or col.max() <= 0.0:
            return -np.inf, np.zeros(1), None, False, 0

    lam = np.zeros(q)
    f_cur = float(logsumexp(H @ lam))
    for it in range(1, EL_MAX_ITER + 1):
        logits = H @ lam
        w = np.exp(logits - logsumexp(logits))
        grad = w @ H
        if float(np.max(np.abs(grad))) < EL_TOL:
            log_w = logits - logsumexp(logits)
            return float(np.sum(log_w)), lam, w, True, it - 1
        hc = H - grad
        hess = (hc * w[:, None]).T @ hc
        try:
            step = np.linalg.solve(hess, -grad)
        except np.linalg.LinAlgError:
            step, *_ = np.linalg.lstsq(hess, -grad, rcond=None)
        slope = float(grad @ step)
        if slope > 0:
            step = -grad
            slope = -float(grad @ grad)
        t = 1.0
        for _ in range(40):
            lam_new = lam + t * step
            f_new = float(logsumexp(H @ lam_new))
            if f_new <= f_cur + 1e-4 * t * slope:
                break
            t *= 0.5
        else:
            return -np.inf, lam, None, False, it
        lam, f_cur = lam_new, f_new
    logits = H @ lam
    w = np.exp(logits - logsumexp(logits))
    if float(np.max(np.abs(w @ H))) < EL_TOL:
        log_w = logits - logsumexp(logits)
        return float(np.sum(log_w)), lam, w, True, EL_MAX_ITER
    return -np.inf, lam, None, False, EL_MAX_ITER


def betel_logweight(data, theta, h) -> float:
    """Log of the tilted-likelihood factor prod p*_i at theta (-inf if infeasible)."""
    log_lik, *_ = betel_solve_values(constraint_matrix(data, theta, h))
    return log_lik
