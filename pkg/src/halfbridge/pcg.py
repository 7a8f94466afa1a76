"""Partially collapsed Gibbs (PCG) sampler for the L_{1/2}-type prior.

Model::

    y | beta, sigma2 ~ N(X beta, sigma2 I)
    beta_j | tau2_j, lam ~ N(0, tau2_j / lam^(2^(g+1)))
    tau2_j | v_1j ~ Exp(rate 1/(2 v_1j^2))
    v_ij | v_(i+1)j ~ Gamma((2^i+1)/2, rate 1/(4 v_(i+1)j^2)),  v_(g+1) = 1
    lam | b ~ Gamma(1/2, rate 1/b),  b ~ InvGamma(1/2, 1)
    pi(sigma2) ~ 1/sigma2

One sweep draws beta, then lam with tau2 and v integrated out, then the
local scales top-down, then sigma2 and b.
"""

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .distributions import (
    sample_gamma,
    sample_gaussian_posterior,
    sample_inv_gamma,
    sample_inverse_gaussian,
)
from .errors import NumericalSingularityError, ParameterDomainError
from .rng import RngStream
from .trace import Trace

__all__ = ["PcgState", "init_state", "pcg_step", "run_pcg", "run_chains"]

BETA_FLOOR = 1e-300
TAU2_MIN, TAU2_MAX = 1e-300, 1e300
_LOG_MAX = np.log(1e300)


@dataclass
class PcgState:
    '''
    One configuration of the augmented chain.

    ``v`` has shape (gamma, p) with ``v[i-1]`` holding level ``i``; it is
    empty for gamma = 0.  ``omega`` is only used by the logistic sampler.
    '''

    beta: np.ndarray
    tau2: np.ndarray
    v: np.ndarray
    lam: float
    b: float
    sigma2: float
    omega: np.ndarray = None

    def copy(self):
        return replace(
            self,
            beta=self.beta.copy(),
            tau2=self.tau2.copy(),
            v=self.v.copy(),
            omega=None if self.omega is None else self.omega.copy(),
        )


def _check_gamma(gamma, experimental):
    if gamma not in (0, 1, 2):
        raise ParameterDomainError("gamma must be 0, 1 or 2")
    if gamma == 2 and not experimental:
        raise ParameterDomainError("gamma=2 is numerically fragile; pass experimental=True")


def init_state(p, gamma, sigma2=1.0):
    """Neutral starting point: beta = 0 and unit scales."""
    return PcgState(
        beta=np.zeros(p),
        tau2=np.ones(p),
        v=np.ones((gamma, p)),
        lam=1.0,
        b=1.0,
        sigma2=float(sigma2),
    )


def _exp_clip(log_x):
    return np.exp(np.clip(log_x, -_LOG_MAX, _LOG_MAX))


def update_scales(beta, lam, gamma, rng):
    '''
    Local-scale updates given beta and lam: v top-down, then tau2.

    All means are formed in log space.  Returns ``(v, tau2)``.
    '''
    p = beta.shape[0]
    log_abs = np.log(np.maximum(np.abs(beta), BETA_FLOOR))
    log_lam = np.log(lam)
    k = 2 ** gamma
    v = np.empty((gamma, p))
    if gamma == 0:
        mean = _exp_clip(-log_lam - log_abs)
        h = sample_inverse_gaussian(mean, 1.0, rng, size=p)
    else:
        # Top level: 1/v_g ~ IG(1/(2 lam |beta|^(1/2^g)), 1/2).
        log_mean = -np.log(2.0) - log_lam - log_abs / k
        h = sample_inverse_gaussian(_exp_clip(log_mean), 0.5, rng, size=p)
        log_v_up = -np.log(h)
        v[gamma - 1] = _exp_clip(log_v_up)
        for i in range(gamma - 1, 0, -1):
            # 1/v_i ~ IG(1/(2 v_{i+1} lam^(2^(g-i)) |beta|^(1/2^i)), 1/(2 v_{i+1}^2)).
            log_mean = -np.log(2.0) - log_v_up - 2.0 ** (gamma - i) * log_lam - log_abs / 2 ** i
            shape = _exp_clip(-np.log(2.0) - 2.0 * log_v_up)
            h = sample_inverse_gaussian(_exp_clip(log_mean), shape, rng, size=p)
            log_v_up = -np.log(h)
            v[i - 1] = _exp_clip(log_v_up)
        # 1/tau2 ~ IG(1/(lam^(2^g) v_1 |beta|), 1/v_1^2).
        log_mean = -k * log_lam - log_v_up - log_abs
        shape = _exp_clip(-2.0 * log_v_up)
        h = sample_inverse_gaussian(_exp_clip(log_mean), shape, rng, size=p)
    tau2 = np.clip(1.0 / h, TAU2_MIN, TAU2_MAX)
    return v, tau2


def draw_lam(beta, b, gamma, rng, lam_shape=0.5):
    """Collapsed draw lam ~ Gamma(2^g p + 1/2, sum |beta|^(1/2^g) + 1/b)."""
    k = 2 ** gamma
    S = np.sum(np.abs(beta) ** (1.0 / k))
    return sample_gamma(k * beta.shape[0] + lam_shape, S + 1.0 / b, rng)


def prior_variance(state, gamma):
    """Conditional prior variance tau2 / lam^(2^(g+1)) of each beta_j."""
    log_var = np.log(state.tau2) - 2.0 ** (gamma + 1) * np.log(state.lam)
    return _exp_clip(log_var)


def pcg_step(state, data, gamma, rng, experimental=False, sigma2_prior=None, lam_shape=0.5):
    '''
    One PCG sweep.

    Arguments
    ---------
    state : PcgState
        Current configuration; not modified.
    data : Dataset
    gamma : int
        0 (Bayesian LASSO), 1, or 2 (requires ``experimental=True``).
    rng : RngStream
    experimental : bool
    sigma2_prior : tuple (a0, b0), optional
        Proper InvGamma(a0, b0) prior on sigma2 in place of the default
        1/sigma2 prior.  Useful for joint-distribution tests.
    lam_shape : float
        Shape of the Gamma(lam_shape, rate 1/b) hyper-prior on lam; the
        model uses 1/2.

    Returns
    -------
    PcgState
    '''
    _check_gamma(gamma, experimental)
    X, y = data.X, data.y
    n, p = X.shape

    dvar = prior_variance(state, gamma)
    XtX = data.XtX if p <= n else None
    beta = sample_gaussian_posterior(X, y, dvar, state.sigma2, rng, XtX=XtX,
                                     XtY=data.Xty if XtX is not None else None)
    lam = draw_lam(beta, state.b, gamma, rng, lam_shape)
    v, tau2 = update_scales(beta, lam, gamma, rng)
    resid = y - X @ beta
    a0, b0 = (0.0, 0.0) if sigma2_prior is None else sigma2_prior
    sigma2 = sample_inv_gamma(0.5 * n + a0, 0.5 * resid @ resid + b0, rng)
    b = sample_inv_gamma(lam_shape + 0.5, 1.0 + lam, rng)
    return PcgState(beta=beta, tau2=tau2, v=v, lam=lam, b=b, sigma2=sigma2)


def _pcg_names(p):
    return [f"beta{j + 1}" for j in range(p)] + ["sigma2", "lam"]


def _pcg_record(state):
    return np.concatenate([state.beta, [state.sigma2, state.lam]])


def run_chains(step, init, record, names, iters, burn_in, thin, n_chains, seed,
               debug=False, threads=1):
    '''
    Generic multi-chain driver.

    Chain ``c`` owns ``RngStream(seed, c)``.  ``step(state, rng)`` returns the
    next state; ``record(state)`` returns the retained vector.
    '''
    if iters <= burn_in:
        raise ValueError("iters must exceed burn_in")
    if thin < 1 or n_chains < 1:
        raise ValueError("thin and n_chains must be >= 1")
    args = [(step, init, record, names, iters, burn_in, thin, c, seed, debug)
            for c in range(n_chains)]
    if threads > 1 and n_chains > 1:
        with ProcessPoolExecutor(max_workers=min(threads, n_chains)) as pool:
            return list(pool.map(_run_one_chain, *zip(*args)))
    return [_run_one_chain(*a) for a in args]


def _run_one_chain(step, init, record, names, iters, burn_in, thin, chain_id, seed, debug):
    rng = RngStream(seed, chain_id)
    state = init()
    n_keep = (iters - burn_in) // thin
    out = np.empty((n_keep, len(names)))
    extra = {"tau2": [], "v": []} if debug else {}
    t0 = time.perf_counter()
    total = burn_in + n_keep * thin
    k = 0
    for it in range(1, total + 1):
        try:
            state = step(state, rng)
        except NumericalSingularityError as exc:
            raise NumericalSingularityError(
                f"chain {chain_id}, iteration {it}: {exc}", exc.min_diag, it) from exc
        if it > burn_in and (it - burn_in) % thin == 0:
            out[k] = record(state)
            if debug:
                extra["tau2"].append(np.copy(state.tau2))
                extra["v"].append(np.copy(state.v))
            k += 1
    wall = time.perf_counter() - t0
    if debug:
        extra = {key: np.array(val) for key, val in extra.items()}
    return Trace(out, list(names), burn_in, thin, chain_id, wall, extra)


class _PcgStep:
    """Picklable step closure for process pools."""

    def __init__(self, data, gamma, experimental, sigma2_prior=None):
        self.data, self.gamma = data, gamma
        self.experimental, self.sigma2_prior = experimental, sigma2_prior

    def __call__(self, state, rng):
        return pcg_step(state, self.data, self.gamma, rng, self.experimental, self.sigma2_prior)


class _PcgInit:
    def __init__(self, p, gamma, sigma2):
        self.p, self.gamma, self.sigma2 = p, gamma, sigma2

    def __call__(self):
        return init_state(self.p, self.gamma, self.sigma2)


def run_pcg(data, gamma, iters, burn_in, thin=1, n_chains=1, seed=0, debug=False,
            experimental=False, threads=1):
    '''
    Run independent PCG chains.

    Arguments
    ---------
    data : Dataset
    gamma : int
    iters : int
        Total iterations per chain including burn-in.
    burn_in, thin, n_chains : int
    seed : int
        Chain ``c`` uses stream ``(seed, c)``.
    debug : bool
        Also retain tau2 and v draws in ``Trace.extra``.

    Returns
    -------
    list of Trace
        Columns ``beta1..betap, sigma2, lam``.
    '''
    _check_gamma(gamma, experimental)
    sigma2_0 = max(float(np.var(data.y)), 1e-8)
    return run_chains(
        _PcgStep(data, gamma, experimental),
        _PcgInit(data.p, gamma, sigma2_0),
        _pcg_record,
        _pcg_names(data.p),
        iters, burn_in, thin, n_chains, seed, debug, threads,
    )
