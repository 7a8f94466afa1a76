"""Simulated designs and responses for the benchmark scenarios."""

from dataclasses import dataclass, field

import numpy as np

from ..data import Dataset
from ..rng import RngStream, as_stream

__all__ = ["SimScenario", "gen_design", "gen_response", "simulate", "DEFAULT_BETA",
           "TABLE1_LOCATIONS"]

DEFAULT_BETA = np.array([3.0, 1.5, 2.0, 1.0, 1.0, 0.5, -0.5, 2.0, -1.2, -1.0])
# 1-based positions of the nonzero coefficients in the ESS benchmark.
TABLE1_LOCATIONS = (1, 2, 5, 10, 13, 19, 26, 31, 46, 51)


def default_beta_values(s0):
    '''``DEFAULT_BETA`` repeated (and truncated) to length ``s0``.'''
    reps = -(-s0 // DEFAULT_BETA.size) if s0 else 0
    return np.tile(DEFAULT_BETA, reps)[:s0]


@dataclass
class SimScenario:
    '''
    One simulation setting.

    Arguments
    ---------
    n, p, s0 : int
    sigma2_0 : float
        Noise variance.
    rho : float
        AR(1) correlation between neighbouring columns.
    beta_values : ndarray, optional
        The ``s0`` nonzero values; defaults to :func:`default_beta_values`.
    placement : "random" or sequence of int
        1-based fixed positions, or a seeded random subset.
    seed : int
    '''

    n: int
    p: int
    s0: int
    sigma2_0: float = 1.0
    rho: float = 0.5
    beta_values: np.ndarray = None
    placement: object = "random"
    seed: int = 0
    name: str = field(default="")

    def __post_init__(self):
        if not 0 <= self.s0 <= self.p:
            raise ValueError("need 0 <= s0 <= p")
        if not 0 <= self.rho < 1:
            raise ValueError("rho must lie in [0, 1)")
        if self.sigma2_0 < 0:
            raise ValueError("sigma2_0 must be non-negative")
        if self.beta_values is None:
            self.beta_values = default_beta_values(self.s0)
        self.beta_values = np.asarray(self.beta_values, dtype=float)
        if self.beta_values.shape != (self.s0,):
            raise ValueError("beta_values must have length s0")
        if not isinstance(self.placement, str):
            self.placement = tuple(int(i) for i in self.placement)
            if len(self.placement) != self.s0 or min(self.placement, default=1) < 1 \
                    or max(self.placement, default=1) > self.p:
                raise ValueError("fixed placement must list s0 positions in 1..p")
        if not self.name:
            self.name = f"n={self.n},p={self.p},s0={self.s0},sigma2={self.sigma2_0:g}"

    def beta0(self):
        '''True coefficient vector (random placement drawn from stream 1 of ``seed``).'''
        b = np.zeros(self.p)
        if self.s0 == 0:
            return b
        if isinstance(self.placement, str):
            idx = RngStream(self.seed, 1).generator.permutation(self.p)[: self.s0]
        else:
            idx = np.asarray(self.placement) - 1
        b[idx] = self.beta_values
        return b


def gen_design(n, p, rho, seed):
    '''
    AR(1)-correlated Gaussian design, centered and scaled to ``||X_j||^2 = n``.

    Columns follow ``x_j = rho x_(j-1) + sqrt(1 - rho^2) xi_j`` so that
    ``corr(x_i, x_j) = rho^|i-j|``.  The returned Dataset has ``y = 0``.
    '''
    if not 0 <= rho < 1:
        raise ValueError("rho must lie in [0, 1)")
    gen = as_stream(seed).generator
    xi = gen.standard_normal((n, p))
    X = np.empty((n, p))
    X[:, 0] = xi[:, 0]
    s = np.sqrt(1.0 - rho * rho)
    for j in range(1, p):
        X[:, j] = rho * X[:, j - 1] + s * xi[:, j]
    X -= X.mean(axis=0)
    X /= np.sqrt(np.einsum("ij,ij->j", X, X) / n)
    return Dataset(X, np.zeros(n), standardized=True)


def gen_response(design, scenario, rng):
    '''``y = X beta0 + sigma_0 eps``, centered.'''
    gen = as_stream(rng).generator
    y = design.X @ scenario.beta0() + np.sqrt(scenario.sigma2_0) * gen.standard_normal(design.n)
    y -= y.mean()
    return Dataset(design.X, y, standardized=True)


def simulate(scenario):
    '''Design and response for ``scenario`` (streams 0 and 2 of its seed).'''
    design = gen_design(scenario.n, scenario.p, scenario.rho, scenario.seed)
    return gen_response(design, scenario, RngStream(scenario.seed, 2))
