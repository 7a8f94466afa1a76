"""Effective sample size and posterior-sample variable selection."""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

__all__ = ["DegenerateChainWarning", "EssSummary", "ess", "ess_from_array",
           "summarize_ess", "select_by_t_test", "pooled_beta"]


class DegenerateChainWarning(RuntimeWarning):
    """Raised (as a warning) when every chain is constant."""


def _autocov(x):
    """Biased autocovariance of each row of ``x`` via FFT."""
    m, n = x.shape
    xc = x - x.mean(axis=1, keepdims=True)
    nfft = 1 << int(np.ceil(np.log2(2 * n)))
    f = np.fft.rfft(xc, nfft, axis=1)
    ac = np.fft.irfft(f * np.conj(f), nfft, axis=1)[:, :n]
    return ac / n


def ess_from_array(chains):
    '''
    Multi-chain split effective sample size.

    Each chain is split in half; the between/within variance estimate is
    combined with autocorrelations truncated by Geyer's initial monotone
    sequence rule.

    Arguments
    ---------
    chains : ndarray of shape (n_chains, T)

    Returns
    -------
    float
        ESS.  Constant input returns ``n_chains * T`` and emits
        :class:`DegenerateChainWarning`.
    '''
    x = np.atleast_2d(np.asarray(chains, dtype=float))
    m0, t0 = x.shape
    if t0 < 4:
        raise ValueError("need at least 4 draws per chain")
    if np.all(x == x.flat[0]) or np.all(np.ptp(x, axis=1) == 0):
        warnings.warn("zero-variance chain; ESS set to total draws", DegenerateChainWarning)
        return float(m0 * t0)
    half = t0 // 2
    x = np.concatenate([x[:, :half], x[:, t0 - half:]], axis=0)
    m, n = x.shape
    acov = _autocov(x)
    chain_mean = x.mean(axis=1)
    mean_var = acov[:, 0].mean() * n / (n - 1.0)
    var_plus = mean_var * (n - 1.0) / n
    if m > 1:
        var_plus += np.var(chain_mean, ddof=1)
    if var_plus <= 0:
        warnings.warn("zero-variance chain; ESS set to total draws", DegenerateChainWarning)
        return float(m0 * t0)

    rho = np.zeros(n)
    rho[0] = 1.0
    t = 1
    rho_even = 1.0
    rho_odd = 1.0 - (mean_var - acov[:, 1].mean()) / var_plus
    rho[1] = rho_odd
    while t < n - 3 and rho_even + rho_odd > 0.0:
        rho_even = 1.0 - (mean_var - acov[:, t + 1].mean()) / var_plus
        rho_odd = 1.0 - (mean_var - acov[:, t + 2].mean()) / var_plus
        if rho_even + rho_odd >= 0.0:
            rho[t + 1] = rho_even
            rho[t + 2] = rho_odd
        t += 2
    max_t = t - 2
    if rho_even > 0.0:
        rho[max_t + 1] = rho_even
    # Monotone pair sums.
    t = 1
    while t <= max_t - 2:
        if rho[t + 1] + rho[t + 2] > rho[t - 1] + rho[t]:
            rho[t + 1] = (rho[t - 1] + rho[t]) / 2.0
            rho[t + 2] = rho[t + 1]
        t += 2
    tau = -1.0 + 2.0 * np.sum(rho[: max_t + 1]) + rho[max_t + 1]
    tau = max(tau, 1.0 / np.log10(m * n))
    return float(m * n / tau)


def ess(traces, coord):
    '''
    ESS of one retained column across chains.

    Arguments
    ---------
    traces : list of Trace
    coord : int or str
        Column index or name.
    '''
    if isinstance(coord, str):
        cols = [tr.column(coord) for tr in traces]
    else:
        cols = [tr.draws[:, coord] for tr in traces]
    T = min(len(c) for c in cols)
    if T < 100:
        raise ValueError("need at least 100 retained draws")
    return ess_from_array(np.vstack([c[:T] for c in cols]))


@dataclass
class EssSummary:
    max: float
    min: float
    median: float
    mean: float
    sd: float

    @classmethod
    def of(cls, values):
        v = np.asarray(values, dtype=float)
        if v.size == 0:
            nan = float("nan")
            return cls(nan, nan, nan, nan, nan)
        return cls(float(v.max()), float(v.min()), float(np.median(v)), float(v.mean()),
                   float(v.std(ddof=1)) if v.size > 1 else 0.0)

    def as_dict(self):
        return dict(max=self.max, min=self.min, median=self.median, mean=self.mean, sd=self.sd)


def summarize_ess(traces, beta_true=None):
    '''
    Per-coordinate ESS of beta summarized overall and, with ``beta_true``,
    separately over zero and nonzero coordinates.

    Returns
    -------
    dict of str -> EssSummary with keys ``all`` and optionally ``zero``, ``nonzero``.
    '''
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateChainWarning)
        p = traces[0].beta.shape[1]
        values = np.array([ess_from_array(np.vstack([tr.beta[:, j] for tr in traces]))
                           for j in range(p)])
    out = {"all": EssSummary.of(values)}
    if beta_true is not None:
        nz = np.asarray(beta_true) != 0
        out["nonzero"] = EssSummary.of(values[nz])
        out["zero"] = EssSummary.of(values[~nz])
    return out


def pooled_beta(traces):
    return np.vstack([tr.beta for tr in traces])


def select_by_t_test(traces, level=0.95):
    '''
    Flag coordinates whose posterior mean is far from zero.

    ``j`` is selected when ``|mean_j| / sd_j`` exceeds the two-sided standard
    normal quantile at ``level``; with ``sd_j = 0`` it is selected iff the mean
    is nonzero.
    '''
    draws = pooled_beta(traces) if not isinstance(traces, np.ndarray) else traces
    mean = draws.mean(axis=0)
    sd = draws.std(axis=0, ddof=1)
    crit = norm.ppf(0.5 + level / 2.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        stat = np.abs(mean) / sd
    return np.where(sd > 0, stat > crit, mean != 0)
