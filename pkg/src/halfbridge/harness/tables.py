"""Reduced-scale reproduction of the benchmark tables.

Every table is written as long-format CSV rows
``(scenario, method, criterion, mean, sd, n_reps)``.  Methods that are not
implemented here (NSSL, MC+, the experimental gamma = 2 sampler) appear with
the criterion ``omitted``.
"""

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from ..diagnostics import summarize_ess
from ..errors import ConfigurationError, NumericalSingularityError
from .methods import MCMC_METHODS, NSB_METHODS, fit_mcmc, fit_nsb, run_mcmc
from .metrics import CRITERIA, compute_metrics, summarize_reports
from .simulate import TABLE1_LOCATIONS, SimScenario, simulate

__all__ = ["TableSettings", "settings_for", "reproduce_table", "table_rows", "write_report"]

HEADER = ("scenario", "method", "criterion", "mean", "sd", "n_reps")


@dataclass(frozen=True)
class TableSettings:
    reps: int
    n_chains: int
    burn_in: int
    draws: int
    table1_p: int


SCALES = {
    "desk": TableSettings(reps=20, n_chains=4, burn_in=2000, draws=2000, table1_p=200),
    "full": TableSettings(reps=100, n_chains=10, burn_in=10000, draws=10000, table1_p=1000),
}


def settings_for(scale, reps=None, n_chains=None, burn_in=None, draws=None):
    '''Scale preset with optional overrides.'''
    if scale not in SCALES:
        raise ConfigurationError(f"unknown scale {scale!r}; use 'desk' or 'full'")
    s = SCALES[scale]
    over = dict(reps=reps, n_chains=n_chains, burn_in=burn_in, draws=draws)
    return replace(s, **{k: v for k, v in over.items() if v is not None})


def _scenarios(table_id):
    if table_id == 2:
        return [(500, 25, 10, 3.0), (500, 1000, 10, 1.0), (500, 1000, 10, 3.0)]
    if table_id == 3:
        return [(100, 1000, 10, 1.0), (100, 1000, 10, 3.0)]
    if table_id == 4:
        return [(100, 1000, 0, 1.0), (100, 1000, 0, 3.0)]
    if table_id == 5:
        return [(100, 1000, 20, 1.0), (100, 1000, 20, 3.0)]
    raise ConfigurationError(f"unknown table id {table_id}; expected 1..5")


OMITTED = {
    2: ["L1/2 PCG (gamma=2)", "NSSL", "MC+"],
    3: ["NSSL", "MC+"],
    4: ["NSSL", "MC+"],
    5: ["NSSL", "MC+"],
}
ACCURACY_METHODS = ["L1/2 PCG (gamma=1)", "Horseshoe Gibbs", "Bayesian LASSO Gibbs",
                    "NSB CD (gamma=1)", "NSB CD (gamma=3)"]


def _rep_seed(seed, *keys):
    return int(np.random.SeedSequence([seed, *keys]).generate_state(1, np.uint64)[0])


def _one_replication(args):
    '''Fit every accuracy method on one simulated data set.'''
    sc, st, methods, seed = args
    data = simulate(sc)
    beta0 = sc.beta0()
    out = {}
    for k, m in enumerate(methods):
        try:
            if m in NSB_METHODS:
                fit = fit_nsb(data, NSB_METHODS[m], _rep_seed(seed, k))
            else:
                fit = fit_mcmc(data, m, st.burn_in + st.draws, st.burn_in, st.n_chains,
                               _rep_seed(seed, k))
            out[m] = compute_metrics(fit.beta_hat, fit.sigma2_hat, beta0, fit.support)
        except (NumericalSingularityError, FloatingPointError):
            out[m] = None
    return out


def _fmt(x):
    return "" if x is None or not np.isfinite(x) else f"{x:.6g}"


def _accuracy_rows(table_id, st, seed, threads, methods):
    rows = []
    for si, (n, p, s0, s2) in enumerate(_scenarios(table_id)):
        jobs = []
        for r in range(st.reps):
            sc = SimScenario(n, p, s0, s2, 0.5, seed=_rep_seed(seed, table_id, si, r))
            jobs.append((sc, st, methods, _rep_seed(seed, table_id, si, r, 1)))
        if threads > 1:
            with ProcessPoolExecutor(max_workers=threads) as pool:
                results = list(pool.map(_one_replication, jobs))
        else:
            results = [_one_replication(j) for j in jobs]
        name = jobs[0][0].name
        for m in methods:
            reps = [res[m] for res in results if res[m] is not None]
            failures = sum(res[m] is None for res in results)
            summ = summarize_reports(reps) if reps else {c: (np.nan, np.nan, 0) for c in CRITERIA}
            for c in CRITERIA:
                mean, sd, k = summ[c]
                rows.append((name, m, c, _fmt(mean), _fmt(sd), k))
            rows.append((name, m, "failures", str(failures), "", st.reps))
        for m in OMITTED[table_id]:
            rows.append((name, m, "omitted", "", "", 0))
    return rows


def _ess_rows(st, seed, threads):
    rows = []
    p = st.table1_p
    for si, rho in enumerate((0.5, 0.8)):
        sc = SimScenario(100, p, 10, 1.0, rho, placement=TABLE1_LOCATIONS,
                         seed=_rep_seed(seed, 1, si))
        data = simulate(sc)
        name = f"n=100,p={p},rho={rho:g}"
        for k, m in enumerate(MCMC_METHODS):
            traces = run_mcmc(data, m, st.burn_in + st.draws, st.burn_in, st.n_chains,
                              _rep_seed(seed, 1, si, k), threads)
            summ = summarize_ess(traces, sc.beta0())
            for group in ("zero", "nonzero", "all"):
                for stat, val in summ[group].as_dict().items():
                    rows.append((name, m, f"ESS_{stat}_{group}", _fmt(val), "", 1))
    return rows


def table_rows(table_id, scale="desk", seed=0, threads=1, **overrides):
    '''
    Rows of one reproduced table.

    Arguments
    ---------
    table_id : int
        1 (ESS comparison) or 2..5 (accuracy tables).
    scale : {"desk", "full"}
    seed : int
    threads : int
        Replications run in parallel processes when > 1.
    overrides : reps, n_chains, burn_in, draws
    '''
    st = settings_for(scale, **overrides)
    if table_id == 1:
        return _ess_rows(st, seed, threads)
    _scenarios(table_id)
    return _accuracy_rows(table_id, st, seed, threads, ACCURACY_METHODS)


def write_report(rows, path=None):
    '''Write rows as CSV to ``path`` (or return the text when ``path`` is None).'''
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HEADER)
    w.writerows(rows)
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text


def reproduce_table(table_id, scale="desk", seed=0, out=None, threads=1, **overrides):
    '''Reproduce a table and write the CSV report; returns the report text.'''
    return write_report(table_rows(table_id, scale, seed, threads, **overrides), out)
