"""Exponential-power prior with exponent 2^-gamma and its hierarchical mixture.

The density is

    lam^(2^g) / (2 (2^g)!) * exp(-lam |beta|^(1/2^g)),

which for ``gamma = 0`` is the Laplace density.  Integrating ``lam`` out under
Gamma(1/2, rate 1/b) gives the non-separable bridge (NSB) marginal prior.
"""

from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import gammaln

from .errors import ParameterDomainError
from .rng import as_stream

__all__ = [
    "EpPriorSpec",
    "NsbSpec",
    "ep_log_density",
    "ep_cdf",
    "sample_ep_mixture",
    "nsb_log_prior",
    "nsb_penalty",
    "nsb_penalty_grad",
    "kappa_density",
]


@dataclass(frozen=True)
class EpPriorSpec:
    """Exponential-power prior with exponent ``2**-gamma`` and rate ``lam``."""

    gamma: int
    lam: float

    def __post_init__(self):
        if int(self.gamma) != self.gamma or self.gamma < 0:
            raise ParameterDomainError("gamma must be a non-negative integer")
        if not self.lam > 0:
            raise ParameterDomainError("lam must be positive")

    @property
    def alpha(self):
        return 2.0 ** -self.gamma


@dataclass(frozen=True)
class NsbSpec:
    """Marginal (lambda-integrated) prior with hyper-parameter ``b``.

    ``b = inf`` is allowed and means ``1/b = 0``.
    """

    gamma: int
    b: float
    p: int

    def __post_init__(self):
        if int(self.gamma) != self.gamma or self.gamma < 0:
            raise ParameterDomainError("gamma must be a non-negative integer")
        if not self.b > 0:
            raise ParameterDomainError("b must be positive")
        if self.p < 1:
            raise ParameterDomainError("p must be at least 1")

    @property
    def C1(self):
        return self.p + 2.0 ** -(self.gamma + 1)

    @property
    def mass(self):
        """Exponent ``2^gamma p + 1/2`` multiplying the log penalty."""
        return 2.0 ** self.gamma * self.p + 0.5


def ep_log_density(beta, spec):
    """Log density of the exponential-power prior, elementwise in ``beta``."""
    k = 2.0 ** spec.gamma
    beta = np.abs(np.asarray(beta, dtype=float))
    const = k * np.log(spec.lam) - np.log(2.0) - gammaln(k + 1.0)
    return const - spec.lam * beta ** (1.0 / k)


def ep_cdf(x, spec):
    """Closed-form CDF via the regularized incomplete gamma function."""
    from scipy.special import gammainc

    k = 2.0 ** spec.gamma
    x = np.asarray(x, dtype=float)
    tail = gammainc(k, spec.lam * np.abs(x) ** (1.0 / k))
    return 0.5 + 0.5 * np.sign(x) * tail


def sample_ep_mixture(spec, rng, size=None):
    '''
    Draw from the exponential-power prior through its scale-mixture hierarchy.

    For gamma >= 1::

        v_g ~ Gamma((2^g + 1)/2, rate 1/4)
        v_i | v_{i+1} ~ Gamma((2^i + 1)/2, rate 1/(4 v_{i+1}^2)),  i = g-1..1
        tau2 | v_1 ~ Exp(rate 1/(2 v_1^2))
        beta | tau2 ~ N(0, tau2 / lam^(2^(g+1)))

    For gamma = 0 the chain is empty and tau2 ~ Exp(rate 1/2), the
    normal-exponential representation of the Laplace law.

    Returns
    -------
    beta : ndarray of shape ``size``
    v : ndarray of shape ``(gamma,) + size``; ``v[i-1]`` holds level ``i``
    tau2 : ndarray of shape ``size``
    '''
    gen = as_stream(rng).generator
    shape = () if size is None else ((size,) if np.isscalar(size) else tuple(size))
    g = spec.gamma
    v = np.empty((g,) + shape)
    if g >= 1:
        v[g - 1] = gen.gamma((2.0 ** g + 1.0) / 2.0, 4.0, size=shape)
        for i in range(g - 1, 0, -1):
            v[i - 1] = gen.gamma((2.0 ** i + 1.0) / 2.0, 4.0 * v[i] ** 2)
        tau2 = gen.exponential(2.0 * v[0] ** 2)
    else:
        tau2 = gen.exponential(2.0, size=shape)
    log_sd = 0.5 * np.log(tau2) - 2.0 ** g * np.log(spec.lam)
    beta = np.exp(log_sd) * gen.standard_normal(shape)
    return beta, v, tau2


def _abs_power_sum(beta, gamma):
    return np.sum(np.abs(np.asarray(beta, dtype=float)) ** (2.0 ** -gamma))


def nsb_log_prior(beta, spec):
    '''
    Log of the NSB marginal prior pi(beta | b), computed in log space.

    pi(beta | b) = Gamma(2^g p + 1/2) / (sqrt(pi b) 2^p ((2^g)!)^p)
                   * (sum_j |beta_j|^(1/2^g) + 1/b)^-(2^g p + 1/2)
    '''
    beta = np.asarray(beta, dtype=float)
    p = spec.p
    k = 2.0 ** spec.gamma
    inv_b = 1.0 / spec.b
    const = (
        gammaln(k * p + 0.5)
        - 0.5 * np.log(np.pi)
        + 0.5 * np.log(inv_b)
        - p * np.log(2.0)
        - p * gammaln(k + 1.0)
    )
    return const - spec.mass * np.log(_abs_power_sum(beta, spec.gamma) + inv_b)


def nsb_penalty(beta, spec):
    """Penalty ``(2^g p + 1/2) log(sum |beta_j|^(1/2^g) + 1/b)``."""
    return spec.mass * np.log(_abs_power_sum(beta, spec.gamma) + 1.0 / spec.b)


def nsb_penalty_grad(beta, spec):
    '''
    Derivative of the penalty with respect to each ``|beta_j|``.

    Equals ``C1 |beta_j|^(1/2^g - 1) / (sum_i |beta_i|^(1/2^g) + 1/b)``.
    Infinite at ``beta_j = 0`` for gamma >= 1.
    '''
    a = 2.0 ** -spec.gamma
    absb = np.abs(np.asarray(beta, dtype=float))
    S = np.sum(absb ** a) + 1.0 / spec.b
    with np.errstate(divide="ignore"):
        return spec.C1 * absb ** (a - 1.0) / S


def _kappa_integrand(v, kappa):
    return v ** -1.5 * np.exp(-v / 4.0 - (1.0 - kappa) / (2.0 * v * v * kappa))


def kappa_density(kappa):
    '''
    Density of the shrinkage factor ``kappa = 1/(1 + tau2)`` at lam = 1, gamma = 1.

    Evaluated by adaptive Gauss-Kronrod quadrature on (0, 1) and (1, inf).
    '''
    kappa = float(kappa)
    if not 0.0 < kappa < 1.0:
        raise ParameterDomainError("kappa must lie in (0, 1)")
    opts = dict(args=(kappa,), epsabs=1e-10, epsrel=1e-10, limit=500)
    # Integrand peaks near v* solving v^3/4 + 1.5 v^2 = (1-kappa)/kappa; help quad find it.
    c = (1.0 - kappa) / kappa
    peak = min(c ** (1.0 / 3.0), np.sqrt(c / 1.5))
    left_pts = [peak] if 0.0 < peak < 1.0 else None
    lo, _ = integrate.quad(_kappa_integrand, 0.0, 1.0, points=left_pts, **opts)
    hi, _ = integrate.quad(_kappa_integrand, 1.0, np.inf, **opts)
    return (lo + hi) / (8.0 * np.sqrt(np.pi) * kappa * kappa)
