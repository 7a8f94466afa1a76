"""Coordinate descent for the non-separable bridge (NSB) penalty.

Objective (up to constants)::

    L(beta) = 1/2 ||y - X beta||^2 + (2^g p + 1/2) log(sum_j |beta_j|^(1/2^g) + 1/b)

Each coordinate is updated with the exact univariate minimizer: a cheap
lower bound ``u`` on the selection threshold skips hopeless coordinates, a
fixed-point solve of ``beta = rho(beta)`` gives the candidate nonzero
stationary point, and the sign of the descent function decides between it
and zero.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np
from numba import njit

from .errors import DegenerateEBError, ParameterDomainError

__all__ = [
    "CdConfig",
    "CdSolution",
    "partial_residual_correlation",
    "threshold_lower_bound",
    "fixed_point_solve",
    "descent_delta",
    "coordinate_update",
    "cd_loss",
    "run_cd",
    "eb_update_b",
    "run_eb",
    "kkt_residuals",
    "variance_estimate",
]

TIE_TOL = 1e-12
RECOMPUTE_EVERY = 50
MAX_POLISH = 10


@dataclass(frozen=True)
class CdConfig:
    '''
    Settings for :func:`run_cd`.

    ``b = inf`` is accepted and means ``1/b = 0``.  ``fixed_point`` selects
    the inner solver: ``"newton"`` (Newton steps on ``beta - rho(beta)``,
    monotone from the right) or ``"picard"`` (plain iteration of ``rho``).
    '''

    gamma: int = 1
    b: float = 1.0
    eps_outer: float = 1e-6
    eps_inner: float = 1e-8
    max_fixed_point: int = 100
    max_sweeps: int = 500
    fixed_point: str = "newton"

    def __post_init__(self):
        if int(self.gamma) != self.gamma or self.gamma < 0:
            raise ParameterDomainError("gamma must be a non-negative integer")
        if not self.b > 0:
            raise ParameterDomainError("b must be positive")
        if not (self.eps_outer > 0 and self.eps_inner > 0):
            raise ParameterDomainError("tolerances must be positive")
        if self.max_fixed_point < 1 or self.max_sweeps < 1:
            raise ParameterDomainError("iteration caps must be >= 1")
        if self.fixed_point not in ("newton", "picard"):
            raise ParameterDomainError("fixed_point must be 'newton' or 'picard'")

    @property
    def inv_b(self):
        return 0.0 if math.isinf(self.b) else 1.0 / self.b

    def with_b(self, b):
        return replace(self, b=b)


@dataclass
class CdSolution:
    '''
    Result of a CD run.

    ``sigma2_hat`` is ``RSS / (n - s_hat)``, or ``None`` when ``n <= s_hat``
    (and always ``None`` for logistic fits).
    '''

    beta_hat: np.ndarray
    s_hat: int
    sigma2_hat: float
    sweeps: int
    converged: bool
    final_loss: float
    b: float = float("nan")
    loss_trace: np.ndarray = field(default=None, repr=False)


# ---------------------------------------------------------------------------
# scalar kernels
# ---------------------------------------------------------------------------


@njit(cache=True)
def threshold_lower_bound(z_abs_scaled, xtx_j, C1, C2, gamma):
    """Closed-form lower bound ``u`` on the selection threshold."""
    alpha = 2.0 ** (-gamma)
    c = C1 / xtx_j
    denom = 2.0 * C2 + 2.0 * z_abs_scaled ** alpha
    return 2.0 * (c / denom) ** (1.0 / (2.0 - alpha))


@njit(cache=True)
def _rho(beta, a, c, C2, alpha):
    return a - c / (beta + C2 * beta ** (1.0 - alpha))


@njit(cache=True)
def _fixed_point(a, xtx_j, C1, C2, gamma, eps_inner, T, newton):
    """Largest fixed point of rho, or NaN when none is found."""
    alpha = 2.0 ** (-gamma)
    c = C1 / xtx_j
    beta = a
    for _ in range(T):
        q = beta + C2 * beta ** (1.0 - alpha)
        g = beta - a + c / q
        if newton:
            if g <= 0.0:
                return beta
            dq = 1.0 + C2 * (1.0 - alpha) * beta ** (-alpha)
            dg = 1.0 - c * dq / (q * q)
            if dg <= 0.0:
                # Left of the minimizer of the convex g while g > 0: no root.
                return np.nan
            new = beta - g / dg
        else:
            new = beta - g
        if new <= 0.0:
            return np.nan
        if abs(new - beta) < eps_inner:
            return new
        beta = new
    return np.nan


@njit(cache=True)
def descent_delta(beta_abs, z_abs, xtx_j, C2, gamma, p):
    """Univariate loss change ``L_{-j}(beta) - L_{-j}(0)`` at ``|beta_j| = beta_abs``."""
    alpha = 2.0 ** (-gamma)
    mass = 2.0 ** gamma * p + 0.5
    if C2 <= 0.0:
        return np.inf if beta_abs > 0.0 else 0.0
    return 0.5 * xtx_j * beta_abs * beta_abs - z_abs * beta_abs + mass * math.log1p(
        beta_abs ** alpha / C2
    )


@njit(cache=True)
def _tmap(z, xtx_j, C1, C2, gamma, p, beta_in, eps_inner, T, newton):
    z_abs = abs(z)
    if z_abs == 0.0:
        return 0.0
    a = z_abs / xtx_j
    if C2 > 0.0 and a <= threshold_lower_bound(a, xtx_j, C1, C2, gamma):
        return 0.0
    bb = _fixed_point(a, xtx_j, C1, C2, gamma, eps_inner, T, newton)
    if np.isnan(bb):
        return 0.0
    d = descent_delta(bb, z_abs, xtx_j, C2, gamma, p)
    s = 1.0 if z > 0.0 else -1.0
    if d < -TIE_TOL:
        return s * bb
    if d > TIE_TOL:
        return 0.0
    return s * bb if beta_in != 0.0 else 0.0


@njit(cache=True)
def _loss(r, w, S_plus, mass):
    q = 0.0
    for i in range(r.shape[0]):
        q += w[i] * r[i] * r[i]
    if S_plus <= 0.0:
        return -np.inf
    return 0.5 * q + mass * math.log(S_plus)


@njit(cache=True)
def _cd_kernel(XF, y, w, beta, xtx, gamma, p_pen, inv_b, eps_outer, eps_inner, T,
               max_sweeps, newton, record):
    n, p = XF.shape
    alpha = 2.0 ** (-gamma)
    C1 = p_pen + 2.0 ** (-(gamma + 1))
    mass = 2.0 ** gamma * p_pen + 0.5
    r = y - XF @ beta
    absa = np.abs(beta) ** alpha
    trace = np.empty(0)
    if record:
        trace = np.empty(max_sweeps * p + 1)
        trace[0] = _loss(r, w, absa.sum() + inv_b, mass)
    n_rec = 1
    converged = False
    sweeps = 0
    polish = 0
    for sweep in range(max_sweeps):
        if sweep > 0 and sweep % RECOMPUTE_EVERY == 0:
            r = y - XF @ beta
        S = absa.sum()
        diff2 = 0.0
        for j in range(p):
            col = XF[:, j]
            zj = xtx[j] * beta[j]
            for i in range(n):
                zj += w[i] * col[i] * r[i]
            C2 = S - absa[j] + inv_b
            if C2 < 0.0:
                C2 = 0.0
            new = _tmap(zj, xtx[j], C1, C2, gamma, p_pen, beta[j], eps_inner, T, newton)
            if new != beta[j]:
                delta = new - beta[j]
                for i in range(n):
                    r[i] -= delta * col[i]
                na = abs(new) ** alpha
                S += na - absa[j]
                absa[j] = na
                beta[j] = new
                diff2 += delta * delta
                if record:
                    trace[n_rec] = _loss(r, w, S + inv_b, mass)
                    n_rec += 1
        sweeps = sweep + 1
        step = math.sqrt(diff2)
        if step <= eps_outer:
            converged = True
        if converged:
            # A few extra sweeps tighten coordinate-wise optimality cheaply.
            if step <= eps_inner or polish >= MAX_POLISH:
                break
            polish += 1
    return beta, sweeps, converged, trace[:n_rec]


# ---------------------------------------------------------------------------
# public API
# ---------------------------------------------------------------------------


def fixed_point_solve(z_abs_scaled, xtx_j, C1, C2, gamma, eps_inner=1e-8, T=100,
                      method="newton"):
    '''
    Largest solution of ``beta = rho(beta)``, with

        rho(beta) = a - (C1 / xtx_j) / (beta + C2 beta^(1 - 1/2^g)),  a = |z_j| / xtx_j,

    started from ``beta = a``.  Returns ``None`` when an iterate becomes
    non-positive, when no root exists, or after ``T`` iterations.
    '''
    out = _fixed_point(float(z_abs_scaled), float(xtx_j), float(C1), float(C2), int(gamma),
                       float(eps_inner), int(T), method == "newton")
    return None if np.isnan(out) else float(out)


def _weights(data, weights):
    if weights is None:
        return np.ones(data.n)
    return np.asarray(weights, dtype=float)


def partial_residual_correlation(data, beta, j, weights=None):
    """``z_j = X_j' W (y - X_{-j} beta_{-j})`` (``W = I`` by default)."""
    w = _weights(data, weights)
    r = data.y - data.X @ beta
    xj = data.X[:, j]
    return float((w * xj) @ r + ((w * xj) @ xj) * beta[j])


def cd_loss(data, beta, gamma, b, weights=None, y=None, p_pen=None):
    """NSB objective ``1/2 ||y - X beta||_W^2 + (2^g p + 1/2) log(S + 1/b)``."""
    w = _weights(data, weights)
    y = data.y if y is None else y
    p_pen = data.p if p_pen is None else p_pen
    r = y - data.X @ beta
    inv_b = 0.0 if math.isinf(b) else 1.0 / b
    S = np.sum(np.abs(beta) ** (2.0 ** -gamma)) + inv_b
    mass = 2.0 ** gamma * p_pen + 0.5
    if S <= 0:
        return -np.inf
    return 0.5 * float(w @ (r * r)) + mass * math.log(S)


def coordinate_update(data, beta, j, config, weights=None):
    """Exact minimizer of the objective in coordinate ``j`` with the others fixed."""
    w = _weights(data, weights)
    xj = data.X[:, j]
    xtx = float((w * xj) @ xj)
    z = partial_residual_correlation(data, beta, j, weights)
    alpha = 2.0 ** -config.gamma
    C2 = float(np.sum(np.abs(np.delete(beta, j)) ** alpha)) + config.inv_b
    C1 = data.p + 2.0 ** -(config.gamma + 1)
    return float(_tmap(z, xtx, C1, C2, config.gamma, data.p, float(beta[j]),
                       config.eps_inner, config.max_fixed_point, config.fixed_point == "newton"))


def variance_estimate(data, beta):
    """``||y - X beta||^2 / (n - s)``; ``None`` when ``n <= s``."""
    s = int(np.count_nonzero(beta))
    if data.n <= s:
        return None
    r = data.y - data.X @ beta
    return float(r @ r) / (data.n - s)


def run_cd(data, config, beta_init=None, weights=None, y=None, record_loss=False):
    '''
    Cyclic coordinate descent until ``||beta^(i) - beta^(i-1)||_2 <= eps_outer``.

    Once converged, up to ten further sweeps run while the step exceeds
    ``eps_inner``, so returned points satisfy the coordinate-wise optimality
    conditions to roughly the inner tolerance.

    Arguments
    ---------
    data : Dataset
    config : CdConfig
    beta_init : ndarray, optional
        Starting point (default zeros).
    weights : ndarray, optional
        Observation weights for weighted least squares (used by the logistic
        proximal-Newton solver).
    y : ndarray, optional
        Response overriding ``data.y`` (working response).
    record_loss : bool
        Keep the objective after every accepted coordinate change.

    Returns
    -------
    CdSolution
    '''
    X = data.X
    n, p = X.shape
    w = _weights(data, weights)
    yy = data.y if y is None else np.asarray(y, dtype=float)
    beta = np.zeros(p) if beta_init is None else np.array(beta_init, dtype=float)
    XF = np.asfortranarray(X)
    xtx = np.einsum("ij,ij->j", X * w[:, None], X) if weights is not None else data.col_sq_norms
    xtx = np.where(xtx > 0, xtx, np.finfo(float).tiny)
    beta, sweeps, converged, trace = _cd_kernel(
        XF, yy, w, beta, np.ascontiguousarray(xtx), int(config.gamma), float(p), config.inv_b,
        config.eps_outer, config.eps_inner, int(config.max_fixed_point), int(config.max_sweeps),
        config.fixed_point == "newton", record_loss,
    )
    s_hat = int(np.count_nonzero(beta))
    loss = cd_loss(data, beta, config.gamma, config.b, weights, yy)
    sigma2 = None
    if weights is None and y is None:
        sigma2 = variance_estimate(data, beta)
    return CdSolution(beta, s_hat, sigma2, int(sweeps), bool(converged), loss, config.b,
                      trace if record_loss else None)


def eb_update_b(beta_hat, gamma, p=None):
    '''
    Approximate empirical-Bayes update ``b = 2^(g-1) p / sum_j |beta_j|^(1/2^g)``.

    Raises :class:`DegenerateEBError` for an all-zero ``beta_hat``.
    '''
    beta_hat = np.asarray(beta_hat, dtype=float)
    p = beta_hat.shape[0] if p is None else p
    S = float(np.sum(np.abs(beta_hat) ** (2.0 ** -gamma)))
    if S <= 0:
        raise DegenerateEBError("all-zero estimate: empirical-Bayes b is unbounded")
    return 2.0 ** (gamma - 1) * p / S


def run_eb(data, config, b0=None, max_iter=100, rtol=1e-6):
    '''
    Alternate CD fits and :func:`eb_update_b` until ``b`` settles.

    Returns ``(solution, b_path)``.  Stops early if the estimate collapses to
    zero.
    '''
    b = config.b if b0 is None else b0
    beta = np.zeros(data.p)
    path = [b]
    sol = None
    for _ in range(max_iter):
        sol = run_cd(data, config.with_b(b), beta)
        beta = sol.beta_hat
        if sol.s_hat == 0:
            break
        b_new = eb_update_b(beta, config.gamma, data.p)
        path.append(b_new)
        if abs(b_new - b) <= rtol * b:
            b = b_new
            break
        b = b_new
    return sol, np.array(path)


def kkt_residuals(data, beta, config, weights=None, y=None):
    '''
    Per-coordinate optimality check at ``beta``.

    Returns ``(nonzero_resid, zero_ok)``: for nonzero coordinates the value
    ``| |beta_j| - rho(|beta_j|) |``; for zero coordinates whether it is
    sub-threshold, has no fixed point, or has ``delta >= 0``.
    '''
    w = _weights(data, weights)
    X = data.X
    yy = data.y if y is None else y
    p = data.p
    alpha = 2.0 ** -config.gamma
    C1 = p + 2.0 ** -(config.gamma + 1)
    absa = np.abs(beta) ** alpha
    S = absa.sum()
    r = yy - X @ beta
    resid = np.full(p, np.nan)
    zero_ok = np.ones(p, dtype=bool)
    for j in range(p):
        xj = X[:, j]
        xtx = float((w * xj) @ xj)
        z = float((w * xj) @ r) + xtx * beta[j]
        C2 = max(S - absa[j] + config.inv_b, 0.0)
        a = abs(z) / xtx
        if beta[j] != 0:
            bj = abs(beta[j])
            resid[j] = abs(bj - _rho(bj, a, C1 / xtx, C2, alpha))
        else:
            if a == 0 or (C2 > 0 and a <= threshold_lower_bound(a, xtx, C1, C2, config.gamma)):
                continue
            bb = _fixed_point(a, xtx, C1, C2, config.gamma, config.eps_inner,
                              config.max_fixed_point, config.fixed_point == "newton")
            if np.isnan(bb):
                continue
            zero_ok[j] = descent_delta(bb, abs(z), xtx, C2, config.gamma, p) >= -TIE_TOL
    return resid, zero_ok
