"""Command-line interface.

Exit status is 0 on success, 2 for malformed input or configuration and 3
for numerical failures.
"""

import argparse
import csv
import math
import os
import sys
import warnings

import numpy as np

from ..cdopt import CdConfig, run_cd
from ..data import Dataset, Standardizer, read_dataset_csv, write_dataset_csv
from ..diagnostics import DegenerateChainWarning, ess_from_array, pooled_beta, select_by_t_test
from ..errors import (ConfigurationError, DegenerateEBError, NumericalSingularityError,
                      ParameterDomainError)
from ..logistic import LogisticData, proximal_newton_cd, run_pcg_logistic
from ..pcg import run_pcg
from ..screening import backward_screen, forward_screen_cv, write_path_csv
from ..trace import read_trace_binary, read_trace_csv
from .methods import run_mcmc
from .simulate import TABLE1_LOCATIONS, SimScenario, simulate
from .tables import reproduce_table

__all__ = ["main", "build_parser", "read_config"]

EXIT_INPUT = 2
EXIT_NUMERIC = 3


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _global_flags():
    g = argparse.ArgumentParser(add_help=False)
    g.add_argument("--seed", type=int, default=0, help="base random seed")
    g.add_argument("--threads", type=int, default=1, help="worker processes")
    g.add_argument("--config", default=None, help="key=value file of flag defaults")
    g.add_argument("--out", default=".", help="output directory")
    return g


def build_parser():
    glob = _global_flags()
    parser = argparse.ArgumentParser(prog="halfbridge",
                                     description="Bayesian L1/2 regression and NSB coordinate descent")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[glob], help="simulate a scenario to CSV")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--s0", type=int, default=10)
    p.add_argument("--rho", type=float, default=0.5)
    p.add_argument("--sigma2", type=float, default=1.0)
    p.add_argument("--placement", choices=["random", "fixed"], default="random",
                   help="fixed uses the ESS-benchmark positions")

    p = sub.add_parser("pcg", parents=[glob], help="run the PCG sampler or a baseline Gibbs sampler")
    p.add_argument("--data", default=None, help="dataset CSV (default OUT/data.csv)")
    p.add_argument("--gamma", type=int, default=1)
    p.add_argument("--method", choices=["pcg", "horseshoe", "bayes_lasso"], default="pcg")
    p.add_argument("--iters", type=int, default=4000)
    p.add_argument("--burn-in", type=int, default=2000)
    p.add_argument("--chains", type=int, default=4)

    p = sub.add_parser("cd", parents=[glob], help="fit the NSB penalty by coordinate descent")
    p.add_argument("--data", default=None)
    p.add_argument("--gamma", type=int, default=1)
    p.add_argument("--b", type=float, default=None, help="default log(p)/p")
    p.add_argument("--eps-outer", type=float, default=1e-6)
    p.add_argument("--max-sweeps", type=int, default=500)

    p = sub.add_parser("screen", parents=[glob], help="backward or forward screening path")
    p.add_argument("--data", default=None)
    p.add_argument("--gamma", type=int, default=1)
    p.add_argument("--direction", choices=["backward", "forward"], default="backward")
    p.add_argument("--K", type=int, default=5)
    p.add_argument("--L", type=int, default=100)

    p = sub.add_parser("ess", parents=[glob], help="ESS summary of trace files")
    p.add_argument("traces", nargs="+", help="trace CSV or binary files, one per chain")

    p = sub.add_parser("table", parents=[glob], help="reproduce a benchmark table")
    p.add_argument("--id", type=int, required=True)
    p.add_argument("--scale", choices=["desk", "full"], default="desk")
    p.add_argument("--reps", type=int, default=None)
    p.add_argument("--chains", type=int, default=None)
    p.add_argument("--burn-in", type=int, default=None)
    p.add_argument("--draws", type=int, default=None)

    p = sub.add_parser("logistic", parents=[glob], help="logistic PCG and proximal-Newton CD")
    p.add_argument("--data", default=None, help="CSV with y = successes and optional trials")
    p.add_argument("--gamma", type=int, default=1)
    p.add_argument("--b", type=float, default=None)
    p.add_argument("--iters", type=int, default=2000)
    p.add_argument("--burn-in", type=int, default=1000)
    p.add_argument("--chains", type=int, default=2)
    return parser


def read_config(path, subparser):
    '''
    Parse a ``key=value`` file into argv tokens for ``subparser``.

    Keys are flag names without the leading dashes; blank lines and ``#``
    comments are ignored.
    '''
    known = {s for a in subparser._actions for s in a.option_strings}
    tokens = []
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"{path}:0: {exc.strerror}") from None
    with fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigurationError(f"{path}:{lineno}: expected key=value")
            key, val = (s.strip() for s in line.split("=", 1))
            flag = "--" + key.replace("_", "-")
            if flag not in known or flag == "--config":
                raise ConfigurationError(f"{path}:{lineno}: unknown key {key!r}")
            tokens += [flag, val]
    return tokens


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _data_path(args):
    return args.data if args.data else os.path.join(args.out, "data.csv")


def _load_linear(args):
    raw = read_dataset_csv(_data_path(args))
    st = Standardizer.fit(raw.X, raw.y)
    X, y = st.transform(raw.X, raw.y)
    return Dataset(X, y, standardized=True, names=raw.names)


def _write_rows(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _cmd_simulate(args):
    placement = TABLE1_LOCATIONS[: args.s0] if args.placement == "fixed" else "random"
    sc = SimScenario(args.n, args.p, args.s0, args.sigma2, args.rho, placement=placement,
                     seed=args.seed)
    data = simulate(sc)
    write_dataset_csv(os.path.join(args.out, "data.csv"), data)
    _write_rows(os.path.join(args.out, "beta0.csv"), ["name", "beta0"],
                [(nm, f"{b:.17g}") for nm, b in zip(data.names, sc.beta0())])


def _posterior_summary(path, names, traces):
    draws = pooled_beta(traces)
    sel = select_by_t_test(draws)
    rows = [(nm, f"{m:.10g}", f"{s:.10g}", int(k))
            for nm, m, s, k in zip(names, draws.mean(0), draws.std(0, ddof=1), sel)]
    _write_rows(path, ["name", "mean", "sd", "selected"], rows)


def _cmd_pcg(args):
    data = _load_linear(args)
    if args.method == "pcg":
        traces = run_pcg(data, args.gamma, args.iters, args.burn_in, n_chains=args.chains,
                         seed=args.seed, threads=args.threads)
    else:
        key = "Horseshoe Gibbs" if args.method == "horseshoe" else "Bayesian LASSO Gibbs"
        traces = run_mcmc(data, key, args.iters, args.burn_in, args.chains, args.seed,
                          args.threads)
    for tr in traces:
        tr.to_csv(os.path.join(args.out, f"trace_chain{tr.chain_id}.csv"))
    _posterior_summary(os.path.join(args.out, "posterior_summary.csv"), data.names, traces)
    s2 = np.concatenate([tr.column("sigma2") for tr in traces])
    print(f"posterior mean sigma2 = {s2.mean():.6g}")


def _default_b(p):
    return math.log(p) / p if p > 1 else 1.0


def _cmd_cd(args):
    data = _load_linear(args)
    b = _default_b(data.p) if args.b is None else args.b
    cfg = CdConfig(gamma=args.gamma, b=b, eps_outer=args.eps_outer, max_sweeps=args.max_sweeps)
    sol = run_cd(data, cfg)
    _write_rows(os.path.join(args.out, "cd_solution.csv"), ["name", "beta_hat"],
                [(nm, f"{v:.17g}") for nm, v in zip(data.names, sol.beta_hat)])
    s2 = "" if sol.sigma2_hat is None else f"{sol.sigma2_hat:.10g}"
    _write_rows(os.path.join(args.out, "cd_summary.csv"),
                ["b", "s_hat", "sigma2_hat", "loss", "sweeps", "converged"],
                [(f"{b:.10g}", sol.s_hat, s2, f"{sol.final_loss:.10g}", sol.sweeps,
                  int(sol.converged))])
    print(f"s_hat = {sol.s_hat}, sigma2_hat = {s2 or 'NA'}, converged = {sol.converged}")


def _cmd_screen(args):
    data = _load_linear(args)
    if args.direction == "backward":
        path = backward_screen(data, args.gamma, np.arange(1, args.L + 1, dtype=float))
    else:
        path = forward_screen_cv(data, args.gamma, args.K,
                                 np.linspace(0.0, data.p / math.log(data.p), args.L),
                                 seed=args.seed, threads=args.threads)
        _write_rows(os.path.join(args.out, "cv_error.csv"), ["grid_value", "cv_error"],
                    [(f"{t:.17g}", f"{e:.17g}") for t, e in zip(path.grid, path.cv_error)])
        print(f"chosen grid index {path.chosen_index} (t = {path.grid[path.chosen_index]:.6g})")
    write_path_csv(os.path.join(args.out, f"{args.direction}_path.csv"), path)


def _read_trace(path, chain_id):
    with open(path, "rb") as fh:
        magic = fh.read(8)
    if magic == b"HBTRACE1":
        return read_trace_binary(path)
    return read_trace_csv(path, chain_id)


def _cmd_ess(args):
    traces = [_read_trace(p, c) for c, p in enumerate(args.traces)]
    names = traces[0].names
    if any(tr.names != names for tr in traces):
        raise ConfigurationError(f"{args.traces[0]}:1: trace files have different columns")
    T = min(tr.n_draws for tr in traces)
    rows = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateChainWarning)
        for j, nm in enumerate(names):
            e = ess_from_array(np.vstack([tr.draws[:T, j] for tr in traces]))
            rows.append((nm, f"{e:.10g}"))
    _write_rows(os.path.join(args.out, "ess.csv"), ["name", "ess"], rows)
    beta = np.array([float(v) for nm, v in rows if nm.startswith("beta")])
    if beta.size:
        print(f"beta ESS: min {beta.min():.1f} median {np.median(beta):.1f} max {beta.max():.1f}")


def _cmd_table(args):
    path = os.path.join(args.out, f"table{args.id}_{args.scale}.csv")
    reproduce_table(args.id, args.scale, args.seed, out=path, threads=args.threads,
                    reps=args.reps, n_chains=args.chains, burn_in=args.burn_in, draws=args.draws)
    print(path)


def _cmd_logistic(args):
    raw = read_dataset_csv(_data_path(args))
    X = Standardizer.fit(raw.X, raw.y).transform(raw.X)
    data = LogisticData(X, raw.trials, raw.y)
    traces = run_pcg_logistic(data, args.gamma, args.iters, args.burn_in, n_chains=args.chains,
                              seed=args.seed, threads=args.threads)
    _posterior_summary(os.path.join(args.out, "logistic_pcg_summary.csv"), raw.names, traces)
    b = _default_b(data.p) if args.b is None else args.b
    sol = proximal_newton_cd(data, CdConfig(gamma=args.gamma, b=b))
    _write_rows(os.path.join(args.out, "logistic_cd_solution.csv"), ["name", "beta_hat"],
                [(nm, f"{v:.17g}") for nm, v in zip(raw.names, sol.beta_hat)])
    print(f"proximal Newton: s_hat = {sol.s_hat}, outer iterations = {sol.sweeps}")


COMMANDS = {
    "simulate": _cmd_simulate,
    "pcg": _cmd_pcg,
    "cd": _cmd_cd,
    "screen": _cmd_screen,
    "ess": _cmd_ess,
    "table": _cmd_table,
    "logistic": _cmd_logistic,
}


def _config_path(argv):
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if tok.startswith("--config="):
            return tok.split("=", 1)[1]
    return None


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        config = _config_path(argv)
        if config and argv and argv[0] in COMMANDS:
            # Required flags may live in the file, so merge before the full parse.
            subparser = parser._subparsers._group_actions[0].choices[argv[0]]
            argv = [argv[0]] + read_config(config, subparser) + argv[1:]
        args = parser.parse_args(argv)
        os.makedirs(args.out, exist_ok=True)
        COMMANDS[args.command](args)
    except SystemExit as exc:
        return 0 if exc.code is None else int(exc.code)
    except (NumericalSingularityError, DegenerateEBError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigurationError, ParameterDomainError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return 0


if __name__ == "__main__":
    sys.exit(main())
