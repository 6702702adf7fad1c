"""Command-line front end: ``dynmetric {train,eval,predict,synth}``.

Exit codes: 0 success, 2 input or usage error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import classifier, dataset, metric, solver
from .errors import InputError, NumericalError

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _positive_float(s):
    v = float(s)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {s}")
    return v


def _nonneg_int(s):
    v = int(s)
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {s}")
    return v


def _positive_int(s):
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {s}")
    return v


def _int_list(s):
    try:
        ks = [int(v) for v in s.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {s!r}") from None
    if not ks or min(ks) < 1:
        raise argparse.ArgumentTypeError("k values must be >= 1")
    return ks


def _existing_file(s):
    p = Path(s)
    if not p.is_file():
        raise argparse.ArgumentTypeError(f"no such file: {s}")
    return p


def _add_data_args(p):
    p.add_argument("--data", type=_existing_file, required=True, help="feature CSV (header row first)")
    p.add_argument("--label-col", default="label", help="label column name or 0-based index (default: label)")


def _add_solver_args(p):
    d = solver.SolverConfig()
    g = p.add_argument_group("solver")
    g.add_argument("--gamma", type=_positive_float, default=d.gamma)
    g.add_argument("--cycles", type=_nonneg_int, default=d.cycles)
    g.add_argument("--max-sweeps", type=_positive_int, default=d.max_sweeps)
    g.add_argument("--conv-tol", type=_positive_float, default=d.conv_tol)
    g.add_argument("--pct-low", type=float, default=d.percentile_low, help="percentile for the similar bound U")
    g.add_argument("--pct-high", type=float, default=d.percentile_high, help="percentile for the dissimilar bound L")
    g.add_argument("--pair-cap", type=_positive_int, default=d.pair_sample_cap)
    g.add_argument("--seed", type=int, default=d.seed)
    g.add_argument("--rescale-thresholds", action="store_true", help="recompute U/L under each cycle's prior metric")
    g.add_argument("--reset-slack", action="store_true", help="restart every pair's slack at U/L each cycle")
    g.add_argument(
        "--no-standardize", dest="standardize", action="store_false", help="use raw features instead of z-scores"
    )


def _solver_config(args):
    return solver.SolverConfig(
        gamma=args.gamma,
        cycles=args.cycles,
        max_sweeps=args.max_sweeps,
        conv_tol=args.conv_tol,
        percentile_low=args.pct_low,
        percentile_high=args.pct_high,
        pair_sample_cap=args.pair_cap,
        seed=args.seed,
        rescale_thresholds=args.rescale_thresholds,
        carry_slack=not args.reset_slack,
    )


def build_parser():
    parser = _Parser(prog="dynmetric", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", help="learn a metric and write it to a file")
    _add_data_args(p)
    _add_solver_args(p)
    p.add_argument("--out", type=Path, required=True, help="metric file to write")
    p.add_argument("--log", type=Path, help="training log (JSON); default: <out>.log.json")
    p.add_argument("--dump-pairs", type=Path, help="write every cycle's pair sets to this text file")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="stratified cross-validation against the Euclidean baseline")
    _add_data_args(p)
    _add_solver_args(p)
    p.add_argument("--ks", type=_int_list, default=[1, 2, 3, 4, 5], help="comma-separated k values (default 1,2,3,4,5)")
    p.add_argument("--folds", type=int, default=3)
    p.add_argument("--split-seed", type=int, help="fold assignment seed (default: --seed)")
    p.add_argument("--report", type=Path, help="machine-readable report (JSON)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("predict", help="k-NN labels for query rows")
    p.add_argument("--metric", type=_existing_file, required=True)
    p.add_argument("--train", type=_existing_file, required=True, help="labeled training CSV")
    p.add_argument("--query", type=_existing_file, required=True, help="query CSV; a label column, if present, is ignored")
    p.add_argument("--label-col", default="label")
    p.add_argument("--k", type=_positive_int, default=1)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("synth", help="write a synthetic Gaussian-cluster CSV")
    p.add_argument("--classes", type=int, required=True)
    p.add_argument("--per-class", type=int, required=True)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--informative", type=int, required=True)
    p.add_argument("--sep", type=float, required=True)
    p.add_argument("--noise", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_synth)
    return parser


def cmd_train(args):
    ds = dataset.load_csv(args.data, args.label_col)
    scaling = None
    if args.standardize:
        ds, scaling = dataset.standardize(ds)
    M, tlog = solver.train(ds, _solver_config(args))
    metric.save_metric(M, args.out, scaling)
    log_path = args.log or args.out.with_name(args.out.name + ".log.json")
    log_path.write_text(tlog.to_json() + "\n", encoding="utf-8")
    if args.dump_pairs:
        args.dump_pairs.write_text("".join(c.pairs.to_text() for c in tlog.cycles), encoding="utf-8")
    for c in tlog.cycles:
        print(c.summary())
    print(f"wrote {args.out} (dim={M.dim}, cycles={len(tlog.cycles)})")
    return EXIT_OK


def cmd_eval(args):
    ds = dataset.load_csv(args.data, args.label_col)
    split_seed = args.seed if args.split_seed is None else args.split_seed
    report = classifier.cross_validate(
        ds, _solver_config(args), args.ks, args.folds, split_seed, standardize_folds=args.standardize
    )
    sys.stdout.write(report.table())
    if args.report:
        args.report.write_text(report.to_json() + "\n", encoding="utf-8")
    print(f"training time per fold (ms): {', '.join(f'{t:.1f}' for t in report.train_time_ms)}", file=sys.stderr)
    return EXIT_OK


def cmd_predict(args):
    M, scaling = metric.load_metric(args.metric, with_scaling=True)
    train_ds = dataset.load_csv(args.train, args.label_col)
    Q = dataset.load_features(args.query, args.label_col)
    if train_ds.dim != M.dim or Q.shape[1] != M.dim:
        raise metric.DimensionMismatch(
            f"metric dim {M.dim}, training data dim {train_ds.dim}, query dim {Q.shape[1]}"
        )
    if scaling is not None:
        train_ds = scaling.apply(train_ds)
        Q = scaling.transform(Q)
    for lab in classifier.predict_many(train_ds, M, Q, args.k):
        print(lab)
    return EXIT_OK


def cmd_synth(args):
    ds = dataset.generate_synthetic(
        args.classes, args.per_class, args.dim, args.informative, args.sep, args.noise, args.seed
    )
    dataset.write_csv(ds, args.out)
    print(f"wrote {args.out} ({ds.n} rows, dim={ds.dim})")
    return EXIT_OK


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except NumericalError as exc:
        print(f"error: {type(exc).__name__}: {exc} (try a smaller --gamma)", file=sys.stderr)
        return EXIT_NUMERIC
    except (InputError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
