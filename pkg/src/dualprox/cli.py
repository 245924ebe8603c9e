"""Benchmark harness: denoise, lasso, prox-check, and spectra subcommands.

Every run is deterministic given its flags (wall-clock columns aside);
trace CSVs open with a `#` comment echoing the full flag vector so the
files are self-describing. Exit codes: 0 success, 1 runtime or solver
error, 2 usage error.
"""

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import conjprox, dataio, linops, ppdg, problems, sppdg
from .sppdg import AGGREGATE_FIELDS
from .ppdg import TRACE_FIELDS

__all__ = ["main", "build_parser"]

PROX_CHECK_POINTS = 1000
PROX_CHECK_BETAS = (0.1, 1.0, 10.0)
PROX_CHECK_TOL = 5e-4


class UsageError(Exception):
    pass


def _flag_echo(args, names):
    return " ".join(f"{n}={getattr(args, n)}" for n in names)


def _write_summary(path, pairs):
    with open(path, "w", newline="") as fh:
        for key, value in pairs:
            fh.write(f"{key}={value}\n")


def _parse_synthetic_hw(text):
    try:
        h, w = text.lower().split("x")
        return int(h), int(w)
    except ValueError:
        raise UsageError(f"--synthetic expects HxW, got {text!r}") from None


def _parse_synthetic_nn(text):
    try:
        n_rows, n_feat = text.split(",")
        return int(n_rows), int(n_feat)
    except ValueError:
        raise UsageError(f"--synthetic expects N,n got {text!r}") from None


def _parse_seeds(text):
    if "," in text:
        return tuple(int(s) for s in text.split(","))
    return tuple(range(int(text)))


def cmd_denoise(args):
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if args.input:
        original = dataio.read_pgm(args.input)
    elif args.synthetic:
        height, width = _parse_synthetic_hw(args.synthetic)
        original = problems.blocks_image(height, width)
    else:
        raise UsageError("denoise needs --input or --synthetic HxW")
    noisy = dataio.add_gaussian_noise(original, args.sigma, args.seed)
    psnr_in = problems.psnr(noisy.pixels, original.pixels, noisy.height, noisy.width)
    problem = problems.build_denoise(
        noisy, lam=args.lam, c1=args.c1, c2=args.c2, boundary=args.boundary
    )
    alpha = args.alpha if args.alpha else ppdg.default_alpha(problem.lipschitz_L)
    config = ppdg.PpdgConfig(
        alpha=alpha,
        max_iters=args.max_iters,
        tol_step=args.tol,
        preconditioner="scalar_beta",
    )
    records = []
    started = time.perf_counter()
    report = ppdg.solve(problem, config, trace_sink=records.append)
    seconds = time.perf_counter() - started
    denoised = noisy if args.max_iters == 0 else dataio.ImageBuffer(
        noisy.height, noisy.width, np.clip(report.x, 0.0, 1.0)
    )
    psnr_out = problems.psnr(
        report.x if args.max_iters else noisy.pixels,
        original.pixels,
        noisy.height,
        noisy.width,
    )
    echo = _flag_echo(
        args,
        ["input", "synthetic", "sigma", "seed", "lam", "c1", "c2",
         "boundary", "alpha", "max_iters", "tol"],
    )
    dataio.write_trace_csv(
        out / "trace.csv", records, fieldnames=TRACE_FIELDS, comment=f"denoise {echo}"
    )
    dataio.write_pgm(out / "noisy.pgm", noisy)
    dataio.write_pgm(out / "denoised.pgm", denoised)
    _write_summary(
        out / "summary.txt",
        [
            ("psnr_in", f"{psnr_in:.17g}"),
            ("psnr_out", f"{psnr_out:.17g}"),
            ("iters", report.iters),
            ("seconds", f"{seconds:.3f}"),
            ("reason", report.reason),
        ],
    )
    print(f"{psnr_in:.4f},{psnr_out:.4f},{report.iters},{seconds:.3f}")
    return 0


def _load_lasso_problem(args):
    if args.data:
        ds = dataio.parse_libsvm(args.data, n_hint=args.n_hint)
        rows = ds.to_dense()
        labels = ds.labels
        if not np.all(np.isin(labels, (-1.0, 1.0))):
            raise UsageError("dataset labels do not form a two-class set")
    elif args.synthetic:
        n_rows, n_feat = _parse_synthetic_nn(args.synthetic)
        rows, labels = problems.synthetic_fused_lasso_data(n_rows, n_feat, seed=args.data_seed)
    else:
        raise UsageError("lasso needs --data or --synthetic N,n")
    if args.v_file:
        V = problems.validate_graph_matrix(np.loadtxt(args.v_file, delimiter=",", ndmin=2))
        if V.shape[0] != rows.shape[1]:
            raise UsageError("graph matrix size does not match the feature count")
    else:
        V = problems.build_precision_graph(rows, threshold=args.threshold)
    return problems.build_fused_lasso(
        rows, labels, V, lam=args.lam, p=args.p, r=args.r,
        normalize_rows=args.normalize_rows,
    )


def cmd_lasso(args):
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    problem = _load_lasso_problem(args)
    n = problem.n_components
    batch = args.batch if args.batch else max(1, int(0.01 * n))
    seeds = _parse_seeds(args.seeds)
    config = sppdg.SppdgConfig(
        alpha=args.alpha,
        kappa_hat=args.kappa_hat,
        max_epochs=args.max_epochs,
        tol_step=args.tol,
        seeds=seeds,
    )
    result = sppdg.solve_stochastic(
        problem, args.estimator, config, batch_size=batch, period=args.period
    )
    echo = _flag_echo(
        args,
        ["data", "synthetic", "data_seed", "estimator", "seeds", "batch", "period",
         "lam", "p", "r", "threshold", "v_file", "normalize_rows",
         "max_epochs", "tol", "alpha", "kappa_hat"],
    )
    for run in result.per_seed:
        dataio.write_trace_csv(
            out / f"seed_{run.seed}_trace.csv",
            run.records,
            fieldnames=TRACE_FIELDS,
            comment=f"lasso {echo}",
        )
    dataio.write_trace_csv(
        out / "aggregate.csv",
        result.aggregate,
        fieldnames=AGGREGATE_FIELDS,
        comment=f"lasso {echo}",
    )
    survivors = [r for r in result.per_seed if not r.failed]
    if not survivors:
        print("all seeds failed", file=sys.stderr)
        return 1
    final_obj = float(np.mean([r.records[-1].objective for r in survivors if r.records]))
    # finite penalized value (indicator dropped): iterates can sit a hair
    # outside the ball, which turns the extended-real objective infinite
    reg, op = problem.regularizer, problem.operator
    final_pen = float(np.mean([
        problem.full_value(r.report.x) + reg.penalty_value(op.apply(r.report.x))
        for r in survivors
    ]))
    final_rx = float(np.mean([r.report.kkt_x for r in survivors]))
    final_ry = float(np.mean([r.report.kkt_y for r in survivors]))
    _write_summary(
        out / "summary.txt",
        [
            ("estimator", args.estimator),
            ("batch", batch),
            ("seeds_ok", len(survivors)),
            ("seeds_failed", len(result.per_seed) - len(survivors)),
            ("mean_final_objective", f"{final_obj:.17g}"),
            ("mean_final_penalized_objective", f"{final_pen:.17g}"),
            ("mean_final_kkt_x", f"{final_rx:.17g}"),
            ("mean_final_kkt_y", f"{final_ry:.17g}"),
        ],
    )
    print(f"{args.estimator},{len(survivors)},{final_pen:.10g},{final_rx:.4g},{final_ry:.4g}")
    return 0


def _build_regularizer(args):
    if args.reg == "l1":
        return conjprox.L1(args.lam)
    if args.reg == "l0":
        return conjprox.L0Box(args.lam, args.c1, args.c2)
    if args.reg == "lp":
        return conjprox.LpBall(args.lam, args.p, args.r)
    if args.reg == "scad":
        if args.gamma <= 2:
            raise UsageError("scad needs gamma > 2")
        return conjprox.ScadBox(args.lam, args.gamma, args.r)
    raise UsageError(f"unknown regularizer {args.reg!r}")


def cmd_prox_check(args):
    try:
        reg = _build_regularizer(args)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    rng = np.random.default_rng(args.seed)
    points = rng.uniform(-8.0, 8.0, size=args.points)
    deviation = conjprox.oracle_prox_deviation(
        reg, points, PROX_CHECK_BETAS, step=args.step
    )
    status = "ok" if deviation <= PROX_CHECK_TOL else "FAIL"
    print(
        f"{reg.kind}: max |closed-form - grid oracle| = {deviation:.3e} "
        f"over {args.points} points x {len(PROX_CHECK_BETAS)} betas [{status}]"
    )
    return 0 if deviation <= PROX_CHECK_TOL else 1


def _build_operator(args):
    if args.op == "identity":
        return linops.Identity(args.n)
    if args.op == "scaled":
        return linops.ScaledIdentity(args.n, args.scale)
    if args.op == "dense":
        if not args.csv:
            raise UsageError("dense operator needs --csv")
        return linops.load_dense_csv(args.csv)
    if args.op == "gradient2d":
        return linops.Gradient2D(args.height, args.width, boundary=args.boundary)
    if args.op == "stacked":
        if not args.csv:
            raise UsageError("stacked operator needs --csv with the top block")
        return linops.StackedOverIdentity(
            np.loadtxt(args.csv, delimiter=",", ndmin=2)
        )
    raise UsageError(f"unknown operator {args.op!r}")


def cmd_spectra(args):
    op = _build_operator(args)
    bounds = linops.SpectralBounds.from_operator(op, iterations=args.iterations)
    print(f"kind: {op.kind}  ({op.out_dim} x {op.in_dim})")
    print(f"op_norm: {bounds.op_norm:.12g}")
    print(f"min_eig_gram: {bounds.min_eig_gram:.12g}")
    print(f"hat_lambda: {bounds.hat_lambda:.12g}")
    if bounds.is_surjective:
        print("surjective: yes (exact metric preconditioning is well posed)")
    else:
        print("surjective: no (AA^T is singular)")
        print(
            "note: the dual step then relies on the scalar approximation "
            "beta = 1/(alpha ||A||^2), as the denoising experiments do"
        )
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="dualprox",
        description="Primal-dual solvers built on proximal maps of conjugate regularizers",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    fmt = dict(formatter_class=argparse.ArgumentDefaultsHelpFormatter)

    d = sub.add_parser("denoise", help="gradient-sparsity image denoising benchmark", **fmt)
    d.add_argument("--input", help="clean source image (PGM); noise is added by --sigma")
    d.add_argument("--synthetic", help="HxW piecewise-constant test image, e.g. 64x64")
    d.add_argument("--sigma", type=float, default=0.05, help="noise level")
    d.add_argument("--seed", type=int, default=1, help="noise seed")
    d.add_argument("--lam", type=float, default=0.1, help="gradient-sparsity weight")
    d.add_argument("--c1", type=float, default=-1.0, help="lower gradient bound")
    d.add_argument("--c2", type=float, default=1.0, help="upper gradient bound")
    d.add_argument("--boundary", choices=("periodic", "zero-pad"), default="periodic")
    d.add_argument("--alpha", type=float, default=None, help="primal step (default 0.9/(3L))")
    d.add_argument("--max-iters", dest="max_iters", type=int, default=5000)
    d.add_argument("--tol", type=float, default=1e-8)
    d.add_argument("--out-dir", dest="out_dir", default="denoise_out")
    d.set_defaults(func=cmd_denoise)

    l = sub.add_parser("lasso", help="graph-guided fused lasso benchmark", **fmt)
    l.add_argument("--data", help="LIBSVM file with two-class labels")
    l.add_argument("--n-hint", dest="n_hint", type=int, default=None)
    l.add_argument("--synthetic", help="N,n synthetic instance, e.g. 200,20")
    l.add_argument("--data-seed", dest="data_seed", type=int, default=0)
    l.add_argument("--estimator", choices=("saga", "svrg", "sarah", "full"), default="svrg")
    l.add_argument("--seeds", default="10", help="seed count, or comma list of seeds")
    l.add_argument("--batch", type=int, default=None, help="mini-batch size (default 1%% of N)")
    l.add_argument("--period", type=int, default=None, help="snapshot/restart period")
    l.add_argument("--lam", type=float, default=1e-4)
    l.add_argument("--p", type=float, default=0.5)
    l.add_argument("--r", type=float, default=1.0)
    l.add_argument("--threshold", type=float, default=0.5, help="graph correlation threshold")
    l.add_argument("--v-file", dest="v_file", help="CSV graph matrix (overrides --threshold)")
    l.add_argument("--normalize-rows", dest="normalize_rows", action="store_true")
    l.add_argument("--max-epochs", dest="max_epochs", type=int, default=50)
    l.add_argument("--tol", type=float, default=0.0)
    l.add_argument("--alpha", type=float, default=None)
    l.add_argument("--kappa-hat", dest="kappa_hat", type=float, default=0.0)
    l.add_argument("--out-dir", dest="out_dir", default="lasso_out")
    l.set_defaults(func=cmd_lasso)

    p = sub.add_parser("prox-check", help="grid-oracle conformance of a conjugate prox", **fmt)
    p.add_argument("--reg", choices=("l1", "l0", "lp", "scad"), required=True)
    p.add_argument("--lam", type=float, default=1.0)
    p.add_argument("--c1", type=float, default=-1.0)
    p.add_argument("--c2", type=float, default=1.0)
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--r", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=3.0)
    p.add_argument("--points", type=int, default=PROX_CHECK_POINTS)
    p.add_argument("--step", type=float, default=1e-4)
    p.add_argument("--seed", type=int, default=7)
    p.set_defaults(func=cmd_prox_check)

    s = sub.add_parser("spectra", help="operator norm, gram spectrum, surjectivity verdict", **fmt)
    s.add_argument("--op", choices=("identity", "scaled", "dense", "gradient2d", "stacked"),
                   required=True)
    s.add_argument("--n", type=int, default=4)
    s.add_argument("--scale", type=float, default=1.0)
    s.add_argument("--height", type=int, default=8)
    s.add_argument("--width", type=int, default=8)
    s.add_argument("--boundary", choices=("periodic", "zero-pad"), default="periodic")
    s.add_argument("--csv", help="dense matrix / stacked top block")
    s.add_argument("--iterations", type=int, default=500)
    s.set_defaults(func=cmd_spectra)

    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
