"""Random variate generators used by the Gibbs samplers.

All samplers accept scalars or arrays (broadcast together) and an
:class:`~halfbridge.rng.RngStream`.  Parameterizations:

* Gamma(shape, rate), mean ``shape / rate``
* InvGamma(shape, scale), the reciprocal of Gamma(shape, rate=scale)
* InverseGaussian(mean ``mu``, shape ``lam``)
* PG(count, tilt), the Polya-Gamma law of Polson, Scott and Windle
"""

import numpy as np
import scipy.linalg as sla
from scipy.special import log_ndtr

from .errors import NumericalSingularityError, ParameterDomainError
from .rng import as_stream

__all__ = [
    "sample_inverse_gaussian",
    "sample_gamma",
    "sample_inv_gamma",
    "sample_mvn_precision",
    "sample_gaussian_posterior",
    "sample_polya_gamma",
    "sample_polya_gamma_truncated",
]


def _positive(name, value):
    arr = np.asarray(value, dtype=float)
    if not np.all(arr > 0):
        raise ParameterDomainError(f"{name} must be strictly positive")
    return arr


def _shape_of(size, *arrays):
    if size is not None:
        return (size,) if np.isscalar(size) else tuple(size)
    return np.broadcast_shapes(*(np.shape(a) for a in arrays))


def _unwrap(out, shape):
    return float(out) if shape == () else out


def sample_inverse_gaussian(mu, lam, rng, size=None):
    '''
    Inverse Gaussian draws by the Michael-Schucany-Haas transformation.

    The smaller root of the quadratic is formed without cancellation, and the
    large ``mu * chi2 / lam`` regime is evaluated through its reciprocal so that
    very large means (which arise when a coefficient is nearly zero) neither
    overflow nor lose precision.

    Arguments
    ---------
    mu : float or ndarray
        Mean, strictly positive.
    lam : float or ndarray
        Shape, strictly positive.
    rng : RngStream
    size : int or tuple, optional
        Output shape; defaults to the broadcast shape of ``mu`` and ``lam``.
    '''
    mu = _positive("mu", mu)
    lam = _positive("lam", lam)
    shape = _shape_of(size, mu, lam)
    gen = as_stream(rng).generator
    mu = np.broadcast_to(mu, shape)
    lam = np.broadcast_to(lam, shape)

    y = gen.standard_normal(shape) ** 2
    u = gen.random(shape)
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        r = mu * (y / (2.0 * lam))
        small = mu / (1.0 + r + np.sqrt(r * (r + 2.0)))
        inv_r = 1.0 / r
        large = (2.0 * lam / y) / (inv_r + 1.0 + np.sqrt(1.0 + 2.0 * inv_r))
        x = np.where(r < 1.0, small, large)
        take_small = u * (1.0 + x / mu) <= 1.0
        out = np.where(take_small, x, mu * (mu / x))
    out = np.minimum(out, np.finfo(float).max)
    return _unwrap(out, shape)


def sample_gamma(shape, rate, rng, size=None):
    """Gamma(shape, rate) draws; mean ``shape / rate``."""
    a = _positive("shape", shape)
    r = _positive("rate", rate)
    out_shape = _shape_of(size, a, r)
    out = as_stream(rng).generator.gamma(a, 1.0 / r, size=out_shape)
    return _unwrap(out, out_shape)


def sample_inv_gamma(shape, scale, rng, size=None):
    """InvGamma(shape, scale) draws, i.e. ``1 / Gamma(shape, rate=scale)``."""
    a = _positive("shape", shape)
    s = _positive("scale", scale)
    out_shape = _shape_of(size, a, s)
    g = as_stream(rng).generator.gamma(a, 1.0, size=out_shape)
    with np.errstate(divide="ignore", over="ignore"):
        out = s / g
    return _unwrap(np.minimum(out, np.finfo(float).max), out_shape)


def _cholesky_with_jitter(A):
    """Lower Cholesky factor, with up to two escalating ridge jitters."""
    try:
        return sla.cholesky(A, lower=True, check_finite=False)
    except np.linalg.LinAlgError:
        pass
    diag = np.diag(A)
    base = 1.0 + np.max(np.abs(diag))
    for eps in (1e-12, 1e-8):
        B = A.copy()
        B[np.diag_indices_from(B)] += eps * base
        try:
            L = sla.cholesky(B, lower=True, check_finite=False)
        except np.linalg.LinAlgError:
            continue
        if np.all(np.isfinite(L)):
            return L
    min_diag = float(np.min(diag))
    raise NumericalSingularityError(
        f"precision matrix not positive definite (min diagonal {min_diag:.3e})",
        min_diag=min_diag,
    )


def sample_mvn_precision(XtX, d_inv, scale, XtY, rng, sigma2=1.0):
    '''
    Draw from N(A^{-1} XtY, sigma2 A^{-1}) with A = XtX + scale * diag(d_inv).

    Uses a Cholesky factor of the p x p precision; intended for p <= n.
    '''
    XtX = np.asarray(XtX, dtype=float)
    d = np.atleast_1d(np.asarray(d_inv, dtype=float))
    XtY = np.atleast_1d(np.asarray(XtY, dtype=float))
    XtX = np.atleast_2d(XtX)
    p = XtY.shape[0]
    A = XtX.copy()
    A[np.diag_indices(p)] += np.minimum(scale * d, 1e300)
    L = _cholesky_with_jitter(A)
    mean = sla.cho_solve((L, True), XtY, check_finite=False)
    z = as_stream(rng).generator.standard_normal(p)
    noise = sla.solve_triangular(L, z, lower=True, trans="T", check_finite=False)
    return mean + np.sqrt(sigma2) * noise


def sample_gaussian_posterior(X, y, prior_var, sigma2, rng, XtX=None, XtY=None):
    '''
    Conjugate draw of beta for y ~ N(X beta, sigma2 I), beta ~ N(0, diag(prior_var)).

    The target is N(A^{-1} X'y, sigma2 A^{-1}) with A = X'X + sigma2 diag(1/prior_var).
    When p <= n and ``XtX`` is supplied the p x p precision is factorized;
    otherwise the n x n data-augmentation identity of Bhattacharya, Chakraborty
    and Mallick (2016) is used at O(n^2 p) cost.

    Arguments
    ---------
    X : ndarray of shape (n, p)
    y : ndarray of shape (n,)
    prior_var : ndarray of shape (p,)
        Prior variances, clipped to [1e-300, 1e300].
    sigma2 : float
        Noise variance.
    rng : RngStream
    XtX, XtY : ndarray, optional
        Cached cross products for the Cholesky path.
    '''
    n, p = X.shape
    dvar = np.clip(np.asarray(prior_var, dtype=float), 1e-300, 1e300)
    if p <= n and XtX is not None:
        if XtY is None:
            XtY = X.T @ y
        return sample_mvn_precision(XtX, 1.0 / dvar, sigma2, XtY, rng, sigma2=sigma2)

    gen = as_stream(rng).generator
    sd = np.sqrt(sigma2)
    u = np.sqrt(dvar) * gen.standard_normal(p)
    delta = gen.standard_normal(n)
    Phi = X / sd
    v = Phi @ u + delta
    PhiD = Phi * dvar
    M = PhiD @ Phi.T
    M[np.diag_indices(n)] += 1.0
    L = _cholesky_with_jitter(M)
    w = sla.cho_solve((L, True), y / sd - v, check_finite=False)
    return u + PhiD.T @ w


# ---------------------------------------------------------------------------
# Polya-Gamma
# ---------------------------------------------------------------------------

_PG_TRUNC = 0.64


def _pg_series_coef(n, x):
    """Alternating-series coefficient a_n(x) of the J*(1, 0) density."""
    k = n + 0.5
    out = np.empty_like(x)
    hi = x > _PG_TRUNC
    xh = x[hi]
    out[hi] = np.pi * k * np.exp(-0.5 * k * k * np.pi ** 2 * xh)
    xl = x[~hi]
    out[~hi] = np.pi * k * (2.0 / (np.pi * xl)) ** 1.5 * np.exp(-2.0 * k * k / xl)
    return out


def _truncated_ig(z, gen):
    """InverseGaussian(1/z, 1) truncated to (0, t); vectorized rejection."""
    t = _PG_TRUNC
    m = z.shape[0]
    out = np.empty(m)
    with np.errstate(divide="ignore"):
        mu = 1.0 / z
    pending = np.arange(m)
    while pending.size:
        zz = z[pending]
        mm = mu[pending]
        x = np.empty(pending.size)
        wide = mm > t
        # Wide mean: proposal from the Levy tail, tilted acceptance.
        if np.any(wide):
            k = np.flatnonzero(wide)
            e1 = gen.standard_exponential(k.size)
            e2 = gen.standard_exponential(k.size)
            bad = e1 * e1 > 2.0 * e2 / t
            while np.any(bad):
                nb = int(bad.sum())
                e1[bad] = gen.standard_exponential(nb)
                e2[bad] = gen.standard_exponential(nb)
                bad = e1 * e1 > 2.0 * e2 / t
            x[k] = t / (1.0 + t * e1) ** 2
        if np.any(~wide):
            k = np.flatnonzero(~wide)
            mk = mm[k]
            y = gen.standard_normal(k.size) ** 2
            xk = mk + 0.5 * mk * mk * y - 0.5 * mk * np.sqrt(4.0 * mk * y + (mk * y) ** 2)
            flip = gen.random(k.size) > mk / (mk + xk)
            xk[flip] = mk[flip] ** 2 / xk[flip]
            x[k] = xk
        u = gen.random(pending.size)
        ok = np.where(wide, u <= np.exp(-0.5 * zz * zz * x), x <= t)
        out[pending[ok]] = x[ok]
        pending = pending[~ok]
    return out


def _pg1(tilt, gen):
    """Exact PG(1, tilt) draws by Devroye's alternating-series method."""
    z = 0.5 * np.abs(np.asarray(tilt, dtype=float).ravel())
    t = _PG_TRUNC
    K = np.pi ** 2 / 8.0 + 0.5 * z * z
    # Mixture weight of the exponential tail piece versus the truncated IG piece.
    b = np.sqrt(1.0 / t) * (t * z - 1.0)
    a = -np.sqrt(1.0 / t) * (t * z + 1.0)
    x0 = np.log(K) + K * t
    q_over_p = 4.0 / np.pi * (np.exp(x0 - z + log_ndtr(b)) + np.exp(x0 + z + log_ndtr(a)))
    w_exp = 1.0 / (1.0 + q_over_p)

    m = z.shape[0]
    out = np.empty(m)
    pending = np.arange(m)
    while pending.size:
        zz = z[pending]
        use_exp = gen.random(pending.size) < w_exp[pending]
        x = np.empty(pending.size)
        ne = int(use_exp.sum())
        x[use_exp] = t + gen.standard_exponential(ne) / K[pending][use_exp]
        if ne < pending.size:
            x[~use_exp] = _truncated_ig(zz[~use_exp], gen)
        s = _pg_series_coef(0, x)
        y = gen.random(pending.size) * s
        accepted = np.zeros(pending.size, dtype=bool)
        live = np.ones(pending.size, dtype=bool)
        n = 0
        while np.any(live):
            n += 1
            idx = np.flatnonzero(live)
            coef = _pg_series_coef(n, x[idx])
            if n % 2 == 1:
                s[idx] -= coef
                hit = y[idx] <= s[idx]
                accepted[idx[hit]] = True
                live[idx[hit]] = False
            else:
                s[idx] += coef
                miss = y[idx] > s[idx]
                live[idx[miss]] = False
        out[pending[accepted]] = 0.25 * x[accepted]
        pending = pending[~accepted]
    return out


def sample_polya_gamma(count, tilt, rng, size=None):
    '''
    Polya-Gamma PG(count, tilt) draws.

    Unit counts use Devroye's exact sampler; an integer count ``c > 1`` is the
    sum of ``c`` independent unit draws.

    Arguments
    ---------
    count : int or ndarray of int
        First parameter, at least 1.
    tilt : float or ndarray
        Exponential tilting parameter.
    rng : RngStream
    size : int or tuple, optional
    '''
    c = np.asarray(count)
    if not np.all(c >= 1) or not np.all(np.asarray(c) == np.floor(c)):
        raise ParameterDomainError("count must be an integer >= 1")
    tilt = np.asarray(tilt, dtype=float)
    shape = _shape_of(size, c, tilt)
    c = np.broadcast_to(c, shape).astype(np.int64).ravel()
    tl = np.broadcast_to(tilt, shape).ravel()
    gen = as_stream(rng).generator
    rep = np.repeat(tl, c)
    draws = _pg1(rep, gen)
    out = np.add.reduceat(draws, np.concatenate(([0], np.cumsum(c)[:-1]))) if c.size else draws
    return _unwrap(out.reshape(shape), shape)


def sample_polya_gamma_truncated(count, tilt, rng, size=None, trunc=200):
    '''
    Approximate PG(count, tilt) via the truncated sum-of-gammas series.

    The neglected tail is replaced by its expectation so the first moment is
    exact.  Intended as a cross-check for :func:`sample_polya_gamma`.
    '''
    c = _positive("count", count)
    tilt = np.asarray(tilt, dtype=float)
    shape = _shape_of(size, c, tilt)
    c = np.broadcast_to(c, shape)[..., None]
    tl = np.broadcast_to(tilt, shape)[..., None]
    gen = as_stream(rng).generator
    k = np.arange(1, trunc + 1)
    denom = (k - 0.5) ** 2 + tl ** 2 / (4.0 * np.pi ** 2)
    g = gen.gamma(np.broadcast_to(c, shape + (trunc,)), 1.0)
    head = (g / denom).sum(axis=-1) / (2.0 * np.pi ** 2)
    # Exact mean minus the truncated part's mean.
    t = tl[..., 0]
    cc = c[..., 0]
    with np.errstate(invalid="ignore", divide="ignore"):
        full = np.where(np.abs(t) > 1e-8, cc / (2.0 * t) * np.tanh(t / 2.0), cc / 4.0)
    partial = cc * (1.0 / denom).sum(axis=-1) / (2.0 * np.pi ** 2)
    out = head + (full - partial)
    return _unwrap(out, shape)
