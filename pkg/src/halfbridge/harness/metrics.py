"""Estimation and selection accuracy metrics."""

from dataclasses import dataclass, asdict

import numpy as np

__all__ = ["MetricsReport", "compute_metrics", "summarize_reports", "CRITERIA"]

CRITERIA = ("L2", "L1", "FDR", "FNDR", "HD", "s_hat", "sigma2_hat")


@dataclass
class MetricsReport:
    '''
    Accuracy of one fit.

    ``L2`` and ``L1`` are the raw norms of ``beta_hat - beta0``; FDR and FNDR
    are percentages of the selected and unselected counts.
    '''

    L2: float
    L1: float
    FDR: float
    FNDR: float
    HD: int
    s_hat: int
    sigma2_hat: float

    def as_dict(self):
        return asdict(self)


def compute_metrics(beta_hat, sigma2_hat, beta0, support=None):
    '''
    Compare an estimate to the truth.

    Arguments
    ---------
    beta_hat : ndarray of shape (p,)
    sigma2_hat : float or None
    beta0 : ndarray of shape (p,) or SimScenario
    support : bool ndarray, optional
        Selected set; defaults to ``beta_hat != 0``.  MCMC fits pass the
        t-test selection here while ``beta_hat`` is the posterior mean.
    '''
    if hasattr(beta0, "beta0"):
        beta0 = beta0.beta0()
    beta_hat = np.asarray(beta_hat, dtype=float)
    beta0 = np.asarray(beta0, dtype=float)
    if beta_hat.shape != beta0.shape:
        raise ValueError("beta_hat and beta0 differ in shape")
    sel = beta_hat != 0 if support is None else np.asarray(support, dtype=bool)
    true = beta0 != 0
    p = beta0.size
    s_hat = int(sel.sum())
    fp = int(np.sum(sel & ~true))
    fn = int(np.sum(~sel & true))
    d = beta_hat - beta0
    return MetricsReport(
        L2=float(np.linalg.norm(d)),
        L1=float(np.abs(d).sum()),
        FDR=100.0 * fp / max(1, s_hat),
        FNDR=100.0 * fn / max(1, p - s_hat),
        HD=fp + fn,
        s_hat=s_hat,
        sigma2_hat=float("nan") if sigma2_hat is None else float(sigma2_hat),
    )


def summarize_reports(reports):
    '''Mean and sample sd of every criterion; returns ``{name: (mean, sd, n)}``.'''
    out = {}
    for c in CRITERIA:
        v = np.array([getattr(r, c) for r in reports], dtype=float)
        v = v[np.isfinite(v)]
        sd = float(v.std(ddof=1)) if v.size > 1 else 0.0
        out[c] = (float(v.mean()) if v.size else float("nan"), sd, int(v.size))
    return out
