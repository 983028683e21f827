"""``rbpb`` command-line driver.

Exit codes: 0 success, 2 usage/config error, 3 solver failure.
"""

import argparse
import csv
import logging
import os
import sys
import time

import numpy as np

from . import __version__
from .config import ConfigError, load_config, parse_range
from .discretization import ParameterPoint
from .exceptions import (
    FingerprintMismatch,
    FormatVersionMismatch,
    IncompatibleSpace,
    InvalidGrid,
    InvalidParameter,
    NoConvergence,
    Overflow,
    SingularMatrix,
    SweepFailure,
)
from .plotting import line_chart
from .qoi import (
    TruthCache,
    average_potential,
    capacitance_sweep,
    error_curve,
    exact_capacitance_1d,
    exact_sigma_solver,
    rb_sigma_solver,
    truth_sigma_solver,
)
from .rb import greedy_build, load_space, rb_online_solve, save_space
from .truth import solve_truth

log = logging.getLogger("rbpb")

EXIT_OK, EXIT_USAGE, EXIT_SOLVER = 0, 2, 3

USAGE_ERRORS = (
    ConfigError,
    InvalidParameter,
    InvalidGrid,
    FormatVersionMismatch,
    FingerprintMismatch,
    IncompatibleSpace,
    FileNotFoundError,
)
SOLVER_ERRORS = (NoConvergence, Overflow, SingularMatrix, SweepFailure)


class UsageError(Exception):
    pass


def _fmt(v):
    return f"{v:.17g}"


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])


def _param_from_args(args, need_v=True):
    if args.sqrt_D is not None:
        if args.sqrt_D <= 0:
            raise UsageError("sqrt(D) must be positive")
        d = args.sqrt_D**2
    elif args.D is not None:
        d = args.D
    else:
        raise UsageError("one of --D or --sqrt-D is required")
    if d <= 0:
        raise UsageError(f"D must be positive, got {d}")
    if not need_v:
        return d
    if args.V is None:
        raise UsageError("--V is required")
    if args.V < 0:
        raise UsageError(f"V must be non-negative, got {args.V}")
    return ParameterPoint(d, args.V)


def _space_path(args, cfg):
    return args.space or os.path.join(cfg.out, "space.rbs")


def _load_space_for(args, cfg, problem):
    space = load_space(_space_path(args, cfg), problem)
    n = getattr(args, "n", None)
    if n is not None:
        if n < 1 or n > space.N:
            raise UsageError(f"--n must be in [1, {space.N}], got {n}")
        space = space.truncate(n)
    if space.N < 1:
        raise UsageError("RB space is empty")
    return space


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------


def cmd_truth(args, cfg):
    mu = _param_from_args(args)
    problem = cfg.build_problem()
    sol = solve_truth(problem, mu, tol=cfg.truth_tol, max_iter=cfg.max_iter)
    grid = problem.grid
    if grid.dim == 1:
        x = grid.x_all
        phi = problem.full_line(mu, sol.phi)
        _write_csv(os.path.join(cfg.out, "truth_field.csv"), ["x", "phi"], zip(x, phi))
        line = phi
    else:
        rows = grid.as_rows(sol.phi)
        y = grid.y_all
        out_rows = []
        for k in range(grid.ny + 1):
            full = problem.full_line(mu, rows[k])
            out_rows.extend((xj, y[k], p) for xj, p in zip(grid.x_all, full))
        _write_csv(os.path.join(cfg.out, "truth_field.csv"), ["x", "y", "phi"], out_rows)
        x = grid.x_all
        line = problem.full_line(mu, average_potential(sol.phi, grid))
    _write_csv(
        os.path.join(cfg.out, "truth_iterations.csv"),
        ["iteration", "delta"],
        [(i + 1, float(d)) for i, d in enumerate(sol.deltas)],
    )
    line_chart(
        os.path.join(cfg.out, "truth_profile.svg"),
        [(f"D={mu.D:g}, V={mu.V:g}", x, line)],
        title="truth potential (y-average)" if grid.dim == 2 else "truth potential",
        xlabel="x",
        ylabel="phi",
    )
    print(f"truth: D={mu.D:g} V={mu.V:g} iterations={sol.iterations} delta={sol.final_delta:.3e}")
    return EXIT_OK


def cmd_train(args, cfg):
    problem = cfg.build_problem()
    train = cfg.training_set()
    if cfg.n_max > len(train):
        raise UsageError(f"n_max={cfg.n_max} exceeds the training set size {len(train)}")
    space, rounds = greedy_build(
        problem,
        train,
        cfg.n_max,
        seed_index=cfg.seed_index,
        truth_tol=cfg.truth_tol,
        online_tol=cfg.online_tol,
        threads=cfg.threads,
    )
    save_space(space, os.path.join(cfg.out, "space.rbs"))
    _write_csv(
        os.path.join(cfg.out, "greedy_log.csv"),
        ["round", "sqrt_D", "V", "delta_max"],
        [(r.n, float(r.mu.sqrt_D), float(r.mu.V), float(r.delta_max)) for r in rounds],
    )
    line_chart(
        os.path.join(cfg.out, "greedy_delta.svg"),
        [("max estimator", [r.n for r in rounds], [r.delta_max for r in rounds])],
        title="greedy: maximum error estimator",
        xlabel="N",
        ylabel="Delta_max",
        logy=True,
    )
    print(f"train: N={space.N} from {len(train)} training parameters")
    return EXIT_OK


def cmd_evaluate(args, cfg):
    problem = cfg.build_problem()
    space = _load_space_for(args, cfg, problem)
    test = cfg.test_set()
    errs = error_curve(space, problem, test, cache=TruthCache(problem, tol=cfg.truth_tol))
    ns = list(range(1, space.N + 1))
    _write_csv(os.path.join(cfg.out, "error_table.csv"), ["N", "E"], [(n, float(e)) for n, e in zip(ns, errs)])
    line_chart(
        os.path.join(cfg.out, "error_plot.svg"),
        [("E(N)", ns, errs)],
        title="max relative RB error over the test set",
        xlabel="N",
        ylabel="E(N)",
        logy=True,
    )
    print(f"evaluate: E({space.N}) = {errs[-1]:.3e} over {len(test)} test parameters")
    return EXIT_OK


def cmd_capacitance(args, cfg):
    d = _param_from_args(args, need_v=False)
    try:
        vgrid = parse_range(args.V_range)
    except ConfigError as exc:
        raise UsageError(str(exc)) from None
    if vgrid.size < 2:
        raise UsageError("voltage range needs at least two points")
    problem = cfg.build_problem()
    source = args.solver or ("rb" if (args.space or os.path.exists(_space_path(args, cfg))) else "truth")
    if source == "rb":
        space = _load_space_for(args, cfg, problem)
        solver = rb_sigma_solver(space, problem, tol=cfg.online_tol)
    elif source == "truth":
        solver = truth_sigma_solver(problem, tol=cfg.truth_tol)
    else:
        if cfg.dim != 1:
            raise UsageError("the exact solver is only available in 1D")
        solver = exact_sigma_solver()
    curve = capacitance_sweep(solver, d, vgrid, source=source)
    curve.to_csv(os.path.join(cfg.out, f"capacitance_{source}.csv"))
    series = [(f"C ({source})", curve.V_samples, curve.C)]
    if cfg.dim == 1:
        exact = np.array([exact_capacitance_1d(d, v) / 2.0 for v in curve.V_samples])
        err = np.abs(curve.C - exact)
        _write_csv(
            os.path.join(cfg.out, f"capacitance_{source}_error.csv"),
            ["V", "C", "C_exact", "abs_error", "rel_error"],
            zip(curve.V_samples, curve.C, exact, err, err / exact),
        )
        series.append(("C exact", curve.V_samples, exact))
    line_chart(
        os.path.join(cfg.out, f"capacitance_{source}.svg"),
        series,
        title=f"differential capacitance, D={d:g}",
        xlabel="V",
        ylabel="C",
    )
    print(f"capacitance: {len(vgrid)} voltages, source={source}")
    return EXIT_OK


def cmd_benchmark(args, cfg):
    if args.n is not None and args.n < 1:
        raise UsageError("--n must be >= 1")
    if args.repeats < 1:
        raise UsageError("--repeats must be >= 1")
    mu = _param_from_args(args)
    problem = cfg.build_problem()
    space = _load_space_for(args, cfg, problem)
    truth_t, rb_t = [], []
    for _ in range(args.repeats):
        t0 = time.perf_counter()
        solve_truth(problem, mu, tol=cfg.truth_tol, max_iter=cfg.max_iter)
        truth_t.append(time.perf_counter() - t0)
        t0 = time.perf_counter()
        rb_online_solve(space, problem, mu, tol=cfg.online_tol)
        rb_t.append(time.perf_counter() - t0)
    tm, rm = float(np.mean(truth_t)), float(np.mean(rb_t))
    rows = [("truth_mean_s", tm), ("rb_online_mean_s", rm), ("speedup", tm / rm), ("N", space.N), ("runs", args.repeats)]
    _write_csv(os.path.join(cfg.out, "benchmark.csv"), ["metric", "value"], rows)
    print(f"benchmark: truth {tm:.4f}s  rb {rm:.4f}s  speedup {tm / rm:.1f}x  (N={space.N}, {args.repeats} runs)")
    return EXIT_OK


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="INI experiment config")
    common.add_argument("--out", metavar="DIR", help="output directory (default from config, else ./out)")
    common.add_argument("--threads", metavar="K", type=int, help="worker threads for parameter sweeps")
    common.add_argument("--dim", type=int, choices=(1, 2))
    common.add_argument("--nx", type=int)
    common.add_argument("--ny", type=int)
    common.add_argument("--g", help="fixed charge: zero | gaussian50 | expression in x, y")
    common.add_argument("-v", "--verbose", action="count", default=0)

    param = argparse.ArgumentParser(add_help=False)
    g = param.add_mutually_exclusive_group()
    g.add_argument("--D", type=float)
    g.add_argument("--sqrt-D", dest="sqrt_D", type=float)

    p = argparse.ArgumentParser(prog="rbpb", description="Reduced basis solver for the nonlinear Poisson-Boltzmann equation")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("truth", parents=[common, param], help="one truth solve")
    s.add_argument("--V", type=float)
    s.set_defaults(func=cmd_truth)

    s = sub.add_parser("train", parents=[common], help="greedy offline training")
    s.add_argument("--n-max", dest="n_max", type=int)
    s.add_argument("--seed-index", dest="seed_index", type=int)
    s.add_argument("--train-sqrt-D", dest="train_sqrt_D")
    s.add_argument("--train-V", dest="train_V")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("evaluate", parents=[common], help="E(N) over the test set")
    s.add_argument("--space", metavar="FILE")
    s.add_argument("--n", type=int, help="use only the first n basis vectors")
    s.add_argument("--test-sqrt-D", dest="test_sqrt_D")
    s.add_argument("--test-V", dest="test_V")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("capacitance", parents=[common, param], help="capacitance sweep over V")
    s.add_argument("--space", metavar="FILE")
    s.add_argument("--n", type=int, help="use only the first n basis vectors")
    s.add_argument("--V-range", dest="V_range", default="0:0.02:2", help="start:step:stop")
    s.add_argument("--solver", choices=("rb", "truth", "exact"))
    s.set_defaults(func=cmd_capacitance)

    s = sub.add_parser("benchmark", parents=[common, param], help="truth vs RB online timing")
    s.add_argument("--space", metavar="FILE")
    s.add_argument("--n", type=int, help="use only the first n basis vectors")
    s.add_argument("--V", type=float)
    s.add_argument("--repeats", type=int, default=5)
    s.set_defaults(func=cmd_benchmark)
    return p


def _config_from_args(args):
    cfg = load_config(args.config)
    overrides = {
        k: getattr(args, k, None)
        for k in ("dim", "nx", "ny", "g", "threads", "n_max", "seed_index",
                  "train_sqrt_D", "train_V", "test_sqrt_D", "test_V")
    }
    overrides["out"] = args.out
    cfg = cfg.with_overrides(**overrides)
    return cfg.validate()


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config_from_args(args)
        os.makedirs(cfg.out, exist_ok=True)
        return args.func(args, cfg)
    except (UsageError, *USAGE_ERRORS) as exc:
        print(f"rbpb {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SOLVER_ERRORS as exc:
        print(f"rbpb {args.command}: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
