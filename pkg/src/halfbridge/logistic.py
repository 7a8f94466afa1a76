"""Binomial logistic regression with the L_{1/2}-type prior and NSB penalty.

The sampler uses Polya-Gamma augmentation: given ``omega_i ~ PG(n_i, x_i'beta)``
the likelihood is Gaussian in beta with precision ``X' Omega X`` and linear
term ``X' kappa``, ``kappa_i = y_i - n_i / 2``.  The optimizer is a proximal
Newton (IRLS) outer loop around the weighted NSB coordinate descent.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .cdopt import CdConfig, CdSolution, cd_loss, run_cd
from .data import Dataset
from .distributions import sample_gaussian_posterior, sample_inv_gamma, sample_polya_gamma
from .errors import ParameterDomainError
from .pcg import PcgState, _check_gamma, draw_lam, init_state, prior_variance, run_chains, update_scales

__all__ = ["LogisticData", "pcg_logistic_step", "run_pcg_logistic", "proximal_newton_cd",
           "logistic_nll", "penalized_logistic_loss", "irls_expansion"]

WEIGHT_FLOOR = 1e-5
MAX_HALVINGS = 20


@dataclass(eq=False)
class LogisticData:
    '''
    Binomial responses ``y_i ~ Binom(n_i, expit(x_i' beta))``.

    Arguments
    ---------
    X : ndarray of shape (N, p)
    trials : ndarray of positive int, shape (N,)
    successes : ndarray of int, shape (N,), with ``0 <= y_i <= n_i``
    '''

    X: np.ndarray
    trials: np.ndarray
    successes: np.ndarray

    def __post_init__(self):
        self.X = np.ascontiguousarray(self.X, dtype=float)
        self.successes = np.asarray(self.successes, dtype=float).ravel()
        N = self.X.shape[0]
        if self.trials is None:
            self.trials = np.ones(N)
        self.trials = np.broadcast_to(np.asarray(self.trials, dtype=float), (N,)).copy()
        if self.successes.shape[0] != N:
            raise ValueError("successes must have one entry per row of X")
        if not (np.all(np.isfinite(self.X)) and np.all(np.isfinite(self.successes))):
            raise ValueError("data contain NaN or Inf")
        if np.any(self.trials < 1) or np.any(self.trials != np.floor(self.trials)):
            raise ParameterDomainError("trials must be positive integers")
        if np.any(self.successes < 0) or np.any(self.successes > self.trials) \
                or np.any(self.successes != np.floor(self.successes)):
            raise ParameterDomainError("successes must be integers in [0, trials]")

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    @property
    def kappa(self):
        return self.successes - 0.5 * self.trials

    @classmethod
    def from_dataset(cls, data):
        """Build from a :class:`Dataset` whose ``y`` holds success counts."""
        return cls(data.X, data.trials, data.y)

    def as_dataset(self):
        return Dataset(self.X, self.successes, standardized=True, trials=self.trials)


def logistic_nll(data, beta):
    """Binomial negative log-likelihood (without the binomial coefficients)."""
    psi = data.X @ beta
    return float(np.sum(data.trials * np.logaddexp(0.0, psi) - data.successes * psi))


def penalized_logistic_loss(data, beta, gamma, b):
    '''
    Negative log-likelihood plus the NSB penalty
    ``(2^g p + 1/2) log(sum |beta_j|^(1/2^g) + 1/b)``.
    '''
    inv_b = 0.0 if math.isinf(b) else 1.0 / b
    S = float(np.sum(np.abs(beta) ** (2.0 ** -gamma))) + inv_b
    if S <= 0:
        return -np.inf
    return logistic_nll(data, beta) + (2.0 ** gamma * data.p + 0.5) * math.log(S)


# ---------------------------------------------------------------------------
# Sampler
# ---------------------------------------------------------------------------

def pcg_logistic_step(state, data, gamma, rng, experimental=False, lam_shape=0.5):
    '''
    One PCG sweep for the logistic model.

    Order: beta | omega, lam, tau2; lam (collapsed); v top-down; tau2; omega;
    b.  ``state.sigma2`` is carried unchanged (fixed at 1).

    Arguments
    ---------
    state : PcgState
        ``omega`` must be set (see :func:`init_logistic_state`).
    data : LogisticData
    gamma : int
    rng : RngStream
    '''
    _check_gamma(gamma, experimental)
    omega = state.omega
    sw = np.sqrt(omega)
    Xw = data.X * sw[:, None]
    yw = data.kappa / sw
    dvar = prior_variance(state, gamma)
    n, p = data.X.shape
    XtX = Xw.T @ Xw if p <= n else None
    beta = sample_gaussian_posterior(Xw, yw, dvar, 1.0, rng, XtX=XtX,
                                     XtY=data.X.T @ data.kappa if XtX is not None else None)
    lam = draw_lam(beta, state.b, gamma, rng, lam_shape)
    v, tau2 = update_scales(beta, lam, gamma, rng)
    omega = np.asarray(sample_polya_gamma(data.trials.astype(np.int64), data.X @ beta, rng),
                       dtype=float).reshape(n)
    b = sample_inv_gamma(lam_shape + 0.5, 1.0 + lam, rng)
    return PcgState(beta=beta, tau2=tau2, v=v, lam=lam, b=b, sigma2=1.0, omega=omega)


def init_logistic_state(data, gamma):
    """beta = 0 with omega at its prior mean ``n_i / 4``."""
    st = init_state(data.p, gamma, 1.0)
    st.omega = 0.25 * data.trials.copy()
    return st


class _LogitStep:
    def __init__(self, data, gamma, experimental):
        self.data, self.gamma, self.experimental = data, gamma, experimental

    def __call__(self, state, rng):
        return pcg_logistic_step(state, self.data, self.gamma, rng, self.experimental)


class _LogitInit:
    def __init__(self, data, gamma):
        self.data, self.gamma = data, gamma

    def __call__(self):
        return init_logistic_state(self.data, self.gamma)


def _logit_record(state):
    return np.concatenate([state.beta, [state.lam]])


def run_pcg_logistic(data, gamma, iters, burn_in, thin=1, n_chains=1, seed=0,
                     experimental=False, threads=1):
    '''
    Run independent logistic PCG chains.

    Returns
    -------
    list of Trace
        Columns ``beta1..betap, lam``.
    '''
    _check_gamma(gamma, experimental)
    names = [f"beta{j + 1}" for j in range(data.p)] + ["lam"]
    return run_chains(_LogitStep(data, gamma, experimental), _LogitInit(data, gamma),
                      _logit_record, names, iters, burn_in, thin, n_chains, seed, False, threads)


# ---------------------------------------------------------------------------
# Proximal Newton coordinate descent
# ---------------------------------------------------------------------------

def irls_expansion(data, beta):
    '''
    Quadratic expansion of the negative log-likelihood at ``beta``.

    Returns ``(w, z)`` with ``w_i = n_i P_i (1 - P_i)`` floored at 1e-5 and
    working response ``z = X beta + (y - n P) / w``.
    '''
    psi = data.X @ beta
    P = expit(psi)
    w = np.maximum(data.trials * P * (1.0 - P), WEIGHT_FLOOR)
    z = psi + (data.successes - data.trials * P) / w
    return w, z


def proximal_newton_cd(data, config, beta_init=None, max_outer=100, record_loss=False):
    '''
    NSB-penalized logistic regression by proximal Newton.

    Each outer iteration re-expands the likelihood (:func:`irls_expansion`)
    and solves the weighted NSB problem by coordinate descent from the
    current point.  A step that raises the penalized loss is halved up to
    20 times; if none is accepted the current point is returned.

    Arguments
    ---------
    data : LogisticData
    config : CdConfig
    beta_init : ndarray, optional
    max_outer : int
    record_loss : bool
        Keep the penalized loss after every outer iteration in ``loss_trace``.

    Returns
    -------
    CdSolution
        ``sigma2_hat`` is None; ``sweeps`` counts outer iterations.
    '''
    p = data.p
    beta = np.zeros(p) if beta_init is None else np.array(beta_init, dtype=float)
    ds = Dataset(data.X, data.kappa, standardized=True, trials=data.trials)
    gamma, b = config.gamma, config.b
    f = penalized_logistic_loss(data, beta, gamma, b)
    trace = [f]
    converged = False
    it = 0
    for it in range(1, max_outer + 1):
        w, z = irls_expansion(data, beta)
        inner = run_cd(ds, config, beta_init=beta, weights=w, y=z)
        step = inner.beta_hat - beta
        cand, f_new = inner.beta_hat, penalized_logistic_loss(data, inner.beta_hat, gamma, b)
        k = 0
        slack = 1e-12 * max(1.0, abs(f))
        while f_new > f + slack and k < MAX_HALVINGS:
            step = 0.5 * step
            cand = beta + step
            f_new = penalized_logistic_loss(data, cand, gamma, b)
            k += 1
        if f_new > f + slack:
            converged = True
            break
        delta = np.linalg.norm(cand - beta)
        beta, f = cand, f_new
        trace.append(f)
        if delta <= config.eps_outer:
            converged = True
            break
    return CdSolution(beta, int(np.count_nonzero(beta)), None, it, converged, f, b,
                      np.array(trace) if record_loss else None)
