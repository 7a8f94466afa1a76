"""Uniform fitting wrappers used by the table drivers and the CLI."""

import math
from dataclasses import dataclass

import numpy as np

from ..baselines import run_baseline_gibbs
from ..cdopt import CdConfig
from ..diagnostics import pooled_beta, select_by_t_test
from ..pcg import run_pcg
from ..screening import forward_screen_cv

__all__ = ["Fit", "fit_mcmc", "fit_nsb", "MCMC_METHODS", "NSB_METHODS"]

MCMC_METHODS = {
    "L1/2 PCG (gamma=1)": ("pcg", 1),
    "L1/2 PCG (gamma=0)": ("pcg", 0),
    "Horseshoe Gibbs": ("horseshoe", None),
    "Bayesian LASSO Gibbs": ("bayes_lasso", None),
}
NSB_METHODS = {
    "NSB CD (gamma=1)": 1,
    "NSB CD (gamma=3)": 3,
}


@dataclass
class Fit:
    '''
    Point summary of one fit.

    ``beta_hat`` is the posterior mean for MCMC fits and the CD solution for
    NSB fits; ``support`` is the selected set.
    '''

    beta_hat: np.ndarray
    sigma2_hat: float
    support: np.ndarray
    traces: list = None
    path: object = None


def run_mcmc(data, method, iters, burn_in, n_chains, seed, threads=1):
    '''Run the MCMC ``method`` (a key of ``MCMC_METHODS``); returns traces.'''
    kind, gamma = MCMC_METHODS[method]
    if kind == "pcg":
        return run_pcg(data, gamma, iters, burn_in, n_chains=n_chains, seed=seed, threads=threads)
    return run_baseline_gibbs(data, kind, iters, burn_in, n_chains=n_chains, seed=seed,
                              threads=threads)


def fit_mcmc(data, method, iters, burn_in, n_chains, seed, threads=1, level=0.95):
    '''Posterior means of beta and sigma2 with t-test selection.'''
    traces = run_mcmc(data, method, iters, burn_in, n_chains, seed, threads)
    draws = pooled_beta(traces)
    sigma2 = float(np.mean(np.concatenate([tr.column("sigma2") for tr in traces])))
    return Fit(draws.mean(axis=0), sigma2, select_by_t_test(draws, level), traces)


def fit_nsb(data, gamma, seed, K=5, L=100, max_extend=3, factor=4.0, config=None, threads=1):
    '''
    NSB fit with ``b`` tuned by forward screening and K-fold CV.

    The default ``t`` grid ends at ``p / log p``.  While the CV minimum sits
    on the last grid point the grid end is multiplied by ``factor`` and the
    search repeated, at most ``max_extend`` times.
    '''
    cfg = CdConfig(gamma=gamma) if config is None else config
    t_end = data.p / math.log(data.p)
    for k in range(max_extend + 1):
        path = forward_screen_cv(data, gamma, K, np.linspace(0.0, t_end, L), cfg, seed, threads)
        if path.chosen_index < L - 1:
            break
        t_end *= factor
    sol = path.chosen
    return Fit(sol.beta_hat, sol.sigma2_hat, sol.beta_hat != 0, path=path)
