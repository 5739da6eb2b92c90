"""Command-line entry point: ``szfdpc {solve,montecarlo,benchmark,dataset,train,eval}``.

Exit codes: 0 success, 2 infeasible or malformed input, 3 solver hit its
iteration cap, 4 a solution failed its invariant checks (nothing written).
"""
from __future__ import annotations

import argparse
import csv
import logging
import statistics
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import mlfd
from .ao import check_solution, solve
from .channels import ScenarioConfig, generate_channels, load_channels, snr_to_power
from .effective import effective_channels, papc_usage
from .errors import ChannelFileError, DegenerateChannelError, DimensionError
from .oracle import MAX_N, barrier_primal_solve

EXIT_OK, EXIT_INFEASIBLE, EXIT_NOT_CONVERGED, EXIT_INVARIANT = 0, 2, 3, 4
NATS_TO_BITS = 1.0 / float(np.log(2.0))
CONFIG_KEYS = {"n_tx", "n_rx", "n_users", "snr_dbw", "total_power", "papc_mode", "papc",
               "seed", "tolerance", "max_outer_iters"}

log = logging.getLogger("szfdpc")


class InputError(Exception):
    pass


def read_config(path):
    """Parse a flat ``key=value`` file into a :class:`ScenarioConfig`.

    ``papc_mode`` is ``uniform`` (default), ``random`` (flat Dirichlet ratios
    drawn from ``seed``) or ``explicit`` with comma-separated limits in
    ``papc``. Power is given by ``snr_dbw`` or ``total_power`` (watts).
    """
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise InputError(f"cannot read config: {exc}") from exc
    kv = {}
    for num, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{path}:{num}: expected key=value")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise InputError(f"{path}:{num}: unknown key {key!r}")
        kv[key] = val
    try:
        return make_config(**kv)
    except (KeyError, ValueError) as exc:
        raise InputError(f"{path}: {exc}") from exc


def make_config(n_tx, n_rx, n_users, snr_dbw=None, total_power=None, papc_mode="uniform",
                papc=None, seed=0, tolerance=1e-6, max_outer_iters=500):
    N, M, K, seed = int(n_tx), int(n_rx), int(n_users), int(seed)
    if snr_dbw is not None and total_power is not None:
        raise ValueError("give snr_dbw or total_power, not both")
    P = snr_to_power(float(snr_dbw)) if snr_dbw is not None else float(total_power or 1.0)
    if papc_mode == "uniform":
        p = None
    elif papc_mode == "random":
        p = P * np.random.default_rng([seed, 1]).dirichlet(np.ones(N))
        p *= P / p.sum()
    elif papc_mode == "explicit":
        if papc is None:
            raise ValueError("papc_mode=explicit needs papc=p1,p2,...")
        p = np.array([float(v) for v in str(papc).split(",")])
        if total_power is None and snr_dbw is None:
            P = float(p.sum())
    else:
        raise ValueError(f"papc_mode must be uniform, random or explicit, not {papc_mode!r}")
    return ScenarioConfig(N, M, K, P, p, float(tolerance), seed=seed,
                          max_outer_iters=int(max_outer_iters))


def _int_list(text):
    return [int(v) for v in text.split(",") if v.strip()]


def _open_out(path):
    if path in (None, "-"):
        return sys.stdout, False
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    return open(path, "w", newline=""), True


def _write_rows(path, header, rows):
    fh, close = _open_out(path)
    try:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    finally:
        if close:
            fh.close()


def _solve_checked(config, chans):
    sol, rep = solve(config, chans)
    viol, resid = check_solution(chans, config, sol)
    if viol > config.papc_tolerance * config.total_power or resid > 1e-8:
        raise AssertionError(f"invariant check failed: PAPC violation {viol:.3e}, "
                             f"zero-interference residual {resid:.3e}")
    return sol, rep


def cmd_solve(args):
    config = read_config(args.config)
    chans = load_channels(args.channels) if args.channels else generate_channels(config)
    sol, rep = _solve_checked(config, chans)
    eff = effective_channels(chans)
    usage = papc_usage(eff, sol.downlink_covs)
    rows = [("sum_rate", "", repr(sol.sum_rate), repr(sol.sum_rate * NATS_TO_BITS))]
    rows += [("user_rate", k, repr(float(r)), repr(float(r) * NATS_TO_BITS))
             for k, r in enumerate(sol.user_rates)]
    rows += [("papc_usage", i, repr(float(u)), repr(float(lim)))
             for i, (u, lim) in enumerate(zip(usage, config.per_antenna_power))]
    rows += [("trace", n, repr(float(f)), repr(float(tau)))
             for n, f, tau, _ in rep.trace_rows]
    _write_rows(args.out, ["quantity", "index", "value", "extra"], rows)
    print(f"sum rate {sol.sum_rate:.10g} nats ({sol.sum_rate * NATS_TO_BITS:.10g} bits), "
          f"{rep.outer_iterations} iterations, converged={rep.converged}", file=sys.stderr)
    return EXIT_OK if rep.converged else EXIT_NOT_CONVERGED


def _mc_trial(job):
    N, M, K, P, tol, seed = job
    config = ScenarioConfig(N, M, K, P, tolerance=tol, seed=seed)
    sol, rep = _solve_checked(config, generate_channels(config))
    return sol.sum_rate, rep.converged


def trial_seed(seed, *keys):
    return int(np.random.SeedSequence([seed, *keys]).generate_state(1)[0])


def cmd_montecarlo(args):
    P = snr_to_power(args.snr)
    users = _int_list(args.users)
    for K in users:
        ScenarioConfig(args.n_tx, args.n_rx, K, P).validate()
    jobs = [(args.n_tx, args.n_rx, K, P, args.tolerance, trial_seed(args.seed, t))
            for K in users for t in range(args.trials)]
    if args.workers > 1:
        with ProcessPoolExecutor(args.workers) as pool:
            results = list(pool.map(_mc_trial, jobs))
    else:
        results = [_mc_trial(j) for j in jobs]
    rows, all_converged = [], True
    for i, K in enumerate(users):
        chunk = results[i * args.trials:(i + 1) * args.trials]
        rates = np.array([r for r, _ in chunk])
        all_converged &= all(c for _, c in chunk)
        std = float(rates.std(ddof=1)) if rates.size > 1 else 0.0
        rows.append((K, repr(float(rates.mean())), repr(std),
                     repr(float(rates.mean()) * NATS_TO_BITS), repr(std * NATS_TO_BITS),
                     args.trials))
        log.info("K=%d mean %.6g nats", K, rates.mean())
    _write_rows(args.out, ["n_users", "mean_sum_rate_nats", "std_nats", "mean_sum_rate_bits",
                           "std_bits", "trials"], rows)
    return EXIT_OK if all_converged else EXIT_NOT_CONVERGED


def benchmark_point(N, M, K, trials, seed, P=1.0, run_oracle=True):
    """Median wall-clock seconds of the AO solver and, for N within the cap, the oracle."""
    ao_times, or_times = [], []
    for t in range(trials):
        config = ScenarioConfig(N, M, K, P, seed=trial_seed(seed, N, t))
        chans = generate_channels(config)
        t0 = time.perf_counter()
        solve(config, chans)
        ao_times.append(time.perf_counter() - t0)
        if run_oracle and N <= MAX_N:
            t0 = time.perf_counter()
            barrier_primal_solve(effective_channels(chans), config.per_antenna_power)
            or_times.append(time.perf_counter() - t0)
    return statistics.median(ao_times), (statistics.median(or_times) if or_times else None)


def cmd_benchmark(args):
    rows = []
    for N in _int_list(args.n_tx_list):
        ScenarioConfig(N, args.n_rx, args.n_users).validate()
        ao, orc = benchmark_point(N, args.n_rx, args.n_users, args.trials, args.seed)
        log.info("N=%d ao %.4fs oracle %s", N, ao, orc)
        rows.append((N, repr(ao), "" if orc is None else repr(orc)))
    _write_rows(args.out, ["n_tx", "ao_runtime_s", "oracle_runtime_s"], rows)
    return EXIT_OK


def cmd_dataset(args):
    configs = mlfd.sample_configs(args.n_tx, args.n_rx, args.n_users, args.samples,
                                  seed=args.seed, tolerance=args.tolerance)
    configs[0].validate()
    ds = mlfd.build_dataset(configs, workers=args.workers)
    if args.out in (None, "-"):
        raise InputError("dataset needs --out FILE")
    mlfd.save_dataset(args.out, ds)
    return EXIT_OK


def _load_dataset(path):
    try:
        return mlfd.load_dataset(path)
    except OSError as exc:
        raise InputError(f"cannot read dataset: {exc}") from exc


def cmd_train(args):
    ds = _load_dataset(args.data)
    train, _ = mlfd.train_test_split(ds.n_samples, args.train_size, seed=args.seed)
    model = mlfd.fit_pipeline(ds.subset(train), args.method, args.lam,
                              standardize=args.standardize)
    if args.out in (None, "-"):
        raise InputError("train needs --out FILE")
    mlfd.save_model(args.out, model)
    return EXIT_OK


def cmd_eval(args):
    rows, pairs = [], []
    for path in args.data:
        ds = _load_dataset(path)
        N, M, K = ds.meta
        for method in mlfd.METHODS:
            score, folds = mlfd.evaluate_arrmse(method, ds, args.folds, args.seed, args.lam,
                                                standardize=args.standardize)
            rows.append((N, M, K, method, repr(score), len(folds)))
            print(f"N={N} M={M} K={K} {method}: aRRMSE {score:.3f}%", file=sys.stderr)
        train, test = mlfd.train_test_split(ds.n_samples, args.train_size, seed=args.seed)
        fd = mlfd.fit_pipeline(ds.subset(train), "ols", standardize=args.standardize)
        raw = mlfd.fit_raw_ols(ds.subset(train))
        y_fd = mlfd.predict(fd, ds.features[:, test])
        y_raw = mlfd.predict_raw(raw, ds.features[:, test])
        pairs += [(N, M, K, int(j), repr(float(ds.targets[j])), repr(float(a)), repr(float(b)))
                  for j, a, b in zip(test, y_fd, y_raw)]
    _write_rows(args.out, ["n_tx", "n_rx", "n_users", "method", "arrmse_percent", "folds"], rows)
    if args.pairs:
        _write_rows(args.pairs, ["n_tx", "n_rx", "n_users", "sample", "optimal_nats",
                                 "fd_ols_nats", "raw_ols_nats"], pairs)
    return EXIT_OK


def build_parser():
    ap = argparse.ArgumentParser(
        prog="szfdpc", description="SZFDPC sum-rate solver, benchmarks and regression surrogate.")
    ap.add_argument("--verbose", "-v", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, seed=True):
        p.add_argument("--out", "-o", default="-", help="output file ('-' for stdout)")
        p.add_argument("--verbose", "-v", action="store_true", default=argparse.SUPPRESS)
        if seed:
            p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("solve", help="solve one instance")
    p.add_argument("--config", required=True)
    p.add_argument("--channels", help="channel file; generated from the config seed if absent")
    common(p, seed=False)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("montecarlo", help="average sum rate versus number of users")
    p.add_argument("--n-tx", type=int, default=64)
    p.add_argument("--n-rx", type=int, default=2)
    p.add_argument("--users", default="1,2,3,4", help="comma-separated K values")
    p.add_argument("--snr", type=float, default=10.0, help="dBW")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--tolerance", type=float, default=1e-6)
    p.add_argument("--workers", type=int, default=1)
    common(p)
    p.set_defaults(func=cmd_montecarlo)

    p = sub.add_parser("benchmark", help="AO versus barrier-oracle runtime")
    p.add_argument("--n-tx-list", default="4,6,8,10,12")
    p.add_argument("--n-rx", type=int, default=2)
    p.add_argument("--n-users", type=int, default=2)
    p.add_argument("--trials", type=int, default=5)
    common(p)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("dataset", help="generate a regression dataset")
    p.add_argument("--n-tx", type=int, default=32)
    p.add_argument("--n-rx", type=int, default=2)
    p.add_argument("--n-users", type=int, default=2)
    p.add_argument("--samples", type=int, default=240)
    p.add_argument("--tolerance", type=float, default=1e-6)
    p.add_argument("--workers", type=int, default=1)
    common(p)
    p.set_defaults(func=cmd_dataset)

    for name, func, helptext in (("train", cmd_train, "fit a feature-design model"),
                                 ("eval", cmd_eval, "cross-validated aRRMSE and test pairs")):
        p = sub.add_parser(name, help=helptext)
        if name == "train":
            p.add_argument("--data", required=True)
            p.add_argument("--method", choices=mlfd.METHODS, default="ols")
        else:
            p.add_argument("--data", required=True, nargs="+")
            p.add_argument("--folds", type=int, default=10)
            p.add_argument("--pairs", help="CSV of test-set optimal vs predicted rates")
        p.add_argument("--lambda", dest="lam", type=float, default=1.0)
        p.add_argument("--train-size", type=int, default=216)
        p.add_argument("--standardize", action="store_true",
                       help="select features on the correlation instead of covariance matrix")
        common(p)
        p.set_defaults(func=func)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if getattr(args, "trials", 1) < 1:
        print("error: --trials must be >= 1", file=sys.stderr)
        return EXIT_INFEASIBLE
    try:
        return args.func(args)
    except (InputError, DimensionError, ChannelFileError, DegenerateChannelError,
            ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except AssertionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
