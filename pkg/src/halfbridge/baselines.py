"""Reference Gibbs samplers: Bayesian LASSO and horseshoe.

The Bayesian LASSO sampler is the Park-Casella normal-exponential scheme,
written for the same model as the gamma = 0 PCG sampler (beta not scaled by
sigma, lam ~ Gamma(1/2, 1/b), b ~ InvGamma(1/2, 1)) so the two target the same
posterior.  The horseshoe sampler is the auxiliary-variable scheme of Makalic
and Schmidt (2016) with tau ~ C+(0, 1) and a 1/sigma2 prior.
"""

from dataclasses import dataclass

import numpy as np

from .distributions import (
    sample_gamma,
    sample_gaussian_posterior,
    sample_inv_gamma,
    sample_inverse_gaussian,
)
from .pcg import BETA_FLOOR, TAU2_MAX, TAU2_MIN, run_chains

__all__ = ["run_baseline_gibbs", "LassoState", "HorseshoeState", "lasso_step", "horseshoe_step"]


@dataclass
class LassoState:
    beta: np.ndarray
    s: np.ndarray  # conditional prior variance of beta_j
    lam: float
    b: float
    sigma2: float


@dataclass
class HorseshoeState:
    beta: np.ndarray
    lam2: np.ndarray
    nu: np.ndarray
    tau2: float
    xi: float
    sigma2: float


def _draw_lasso_lam(S, b, p, rng, max_tries=10000):
    '''
    Exact draw from pi(lam) ~ lam^(2p - 1/2) exp(-lam^2 S/2 - lam/b).

    Propose lam^2 ~ Gamma(p + 1/4, rate S/2) and accept with probability
    exp(-lam/b).  Falls back to a slice update on log lam if the acceptance
    rate collapses.
    '''
    gen = rng.generator
    for _ in range(max_tries):
        x = gen.gamma(p + 0.25, 2.0 / S)
        lam = np.sqrt(x)
        if gen.random() <= np.exp(-lam / b):
            return lam
    return _slice_log(lambda t: (2 * p + 0.5) * t - 0.5 * np.exp(2 * t) * S - np.exp(t) / b,
                      np.log(np.sqrt((p + 0.25) * 2.0 / S)), rng)


def _slice_log(logf, t0, rng, width=1.0, n_steps=20):
    gen = rng.generator
    t = t0
    for _ in range(n_steps):
        level = logf(t) - gen.standard_exponential()
        lo = t - width * gen.random()
        hi = lo + width
        while logf(lo) > level:
            lo -= width
        while logf(hi) > level:
            hi += width
        while True:
            cand = lo + (hi - lo) * gen.random()
            if logf(cand) > level:
                t = cand
                break
            if cand < t:
                lo = cand
            else:
                hi = cand
    return float(np.exp(t))


def lasso_step(state, data, rng, fixed_lam=None):
    """One Park-Casella sweep: beta, local variances, lam, sigma2, b."""
    X, y = data.X, data.y
    n, p = X.shape
    XtX = data.XtX if p <= n else None
    beta = sample_gaussian_posterior(X, y, state.s, state.sigma2, rng, XtX=XtX,
                                     XtY=data.Xty if XtX is not None else None)
    lam = state.lam
    absb = np.maximum(np.abs(beta), BETA_FLOOR)
    inv_s = sample_inverse_gaussian(np.minimum(lam / absb, 1e300), lam * lam, rng, size=p)
    s = np.clip(1.0 / inv_s, TAU2_MIN, TAU2_MAX)
    if fixed_lam is None:
        lam = _draw_lasso_lam(np.sum(s), state.b, p, rng)
    resid = y - X @ beta
    sigma2 = sample_inv_gamma(0.5 * n, 0.5 * resid @ resid, rng)
    b = sample_inv_gamma(1.0, 1.0 + lam, rng)
    return LassoState(beta, s, lam, b, sigma2)


def horseshoe_step(state, data, rng):
    """One Makalic-Schmidt horseshoe sweep."""
    X, y = data.X, data.y
    n, p = X.shape
    XtX = data.XtX if p <= n else None
    dvar = state.sigma2 * state.tau2 * state.lam2
    beta = sample_gaussian_posterior(X, y, dvar, state.sigma2, rng, XtX=XtX,
                                     XtY=data.Xty if XtX is not None else None)
    resid = y - X @ beta
    b2 = beta * beta
    shrink = np.sum(b2 / state.lam2) / state.tau2
    sigma2 = sample_inv_gamma(0.5 * (n + p), 0.5 * (resid @ resid + shrink), rng)
    lam2 = sample_inv_gamma(1.0, 1.0 / state.nu + b2 / (2.0 * state.tau2 * sigma2), rng, size=p)
    lam2 = np.clip(lam2, TAU2_MIN, TAU2_MAX)
    tau2 = sample_inv_gamma(0.5 * (p + 1), 1.0 / state.xi + np.sum(b2 / lam2) / (2.0 * sigma2), rng)
    tau2 = float(np.clip(tau2, TAU2_MIN, TAU2_MAX))
    nu = sample_inv_gamma(1.0, 1.0 + 1.0 / lam2, rng, size=p)
    xi = sample_inv_gamma(1.0, 1.0 + 1.0 / tau2, rng)
    return HorseshoeState(beta, lam2, nu, tau2, xi, sigma2)


class _Step:
    def __init__(self, which, data, fixed_lam):
        self.which, self.data, self.fixed_lam = which, data, fixed_lam

    def __call__(self, state, rng):
        if self.which == "bayes_lasso":
            return lasso_step(state, self.data, rng, self.fixed_lam)
        return horseshoe_step(state, self.data, rng)


class _Init:
    def __init__(self, which, p, sigma2, fixed_lam):
        self.which, self.p, self.sigma2, self.fixed_lam = which, p, sigma2, fixed_lam

    def __call__(self):
        p = self.p
        if self.which == "bayes_lasso":
            lam = 1.0 if self.fixed_lam is None else float(self.fixed_lam)
            return LassoState(np.zeros(p), np.ones(p), lam, 1.0, self.sigma2)
        return HorseshoeState(np.zeros(p), np.ones(p), np.ones(p), 1.0, 1.0, self.sigma2)


def _record_lasso(state):
    return np.concatenate([state.beta, [state.sigma2, state.lam]])


def _record_hs(state):
    return np.concatenate([state.beta, [state.sigma2, state.tau2]])


def run_baseline_gibbs(data, which, iters, burn_in, thin=1, n_chains=1, seed=0,
                       fixed_lam=None, threads=1):
    '''
    Run a baseline Gibbs sampler.

    Arguments
    ---------
    which : {"bayes_lasso", "horseshoe"}
    fixed_lam : float, optional
        Hold the Bayesian-LASSO rate fixed instead of sampling it.

    Returns
    -------
    list of Trace
        Columns ``beta1..betap, sigma2`` followed by ``lam`` (Bayesian LASSO)
        or ``tau2`` (horseshoe global scale).
    '''
    if which not in ("bayes_lasso", "horseshoe"):
        raise ValueError(f"unknown baseline {which!r}")
    p = data.p
    names = [f"beta{j + 1}" for j in range(p)] + ["sigma2"]
    names.append("lam" if which == "bayes_lasso" else "tau2")
    record = _record_lasso if which == "bayes_lasso" else _record_hs
    sigma2_0 = max(float(np.var(data.y)), 1e-8)
    return run_chains(_Step(which, data, fixed_lam), _Init(which, p, sigma2_0, fixed_lam),
                      record, names, iters, burn_in, thin, n_chains, seed, False, threads)
