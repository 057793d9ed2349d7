"""Command-line harness: train, calibrate, sweep, pr, theory, simulate.

Every subcommand writes one CSV (to --output or stdout) with a fixed column
set, and is byte-deterministic given identical flags and seeds. A config file
of key=value lines can supply any long flag (hyphens or underscores); flags
given on the command line override the file.
"""

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import bench, calibration, data, simulator, trainer
from .core import ConfidenceParams, Direction, StoppingRule, expected_stop_bound
from .errors import ParameterError, StstError
from .predictor import (
    attentive_from_prefix,
    full_from_prefix,
    load_model,
    prefix_score_matrix,
    save_model,
)

__all__ = ["main"]


def _parse_synthetic(text: str) -> data.SyntheticSpec:
    """Parse 'dim=20,n_pos=500,n_neg=500,sep=4,std=1,seed=7'."""
    fields = {}
    for part in text.split(","):
        key, sep, value = part.partition("=")
        if not sep:
            raise ParameterError(f"bad synthetic spec fragment {part!r}")
        fields[key.strip()] = value.strip()
    try:
        return data.SyntheticSpec(
            dim=int(fields["dim"]),
            n_pos=int(fields["n_pos"]),
            n_neg=int(fields["n_neg"]),
            mean_separation=float(fields["sep"]),
            noise_std=float(fields["std"]),
            seed=int(fields.get("seed", "0")),
        )
    except KeyError as exc:
        raise ParameterError(f"synthetic spec missing field {exc.args[0]!r}") from None
    except ValueError as exc:
        raise ParameterError(f"bad synthetic spec value: {exc}") from None


def _load_config_tokens(path: str) -> list[str]:
    """Turn a key=value config file into CLI tokens (prepended, so real flags win)."""
    tokens: list[str] = []
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        key, sep, value = stripped.partition("=")
        if not sep:
            raise ParameterError(f"config {path}: line {line_no}: expected key=value, got {stripped!r}")
        flag = "--" + key.strip().replace("_", "-")
        value = value.strip()
        if value.lower() in ("true", "false"):
            if value.lower() == "true":
                tokens.append(flag)
        else:
            tokens.extend([flag, value])
    return tokens


def _open_output(path):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", encoding="utf-8", newline="\n"), True


def _write_csv(path, header, rows) -> None:
    stream, owned = _open_output(path)
    try:
        stream.write(",".join(header) + "\n")
        for row in rows:
            stream.write(",".join(row) + "\n")
    finally:
        if owned:
            stream.close()


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _class_label(text: str) -> int:
    if text in ("+1", "1", "pos"):
        return 1
    if text in ("-1", "neg"):
        return -1
    raise ParameterError(f"class must be +1 or -1, got {text!r}")


def _cmd_train(args) -> int:
    if (args.data is None) == (args.synthetic is None):
        raise ParameterError("train needs exactly one of --data or --synthetic")
    if args.data is not None:
        dataset = data.parse_sparse(args.data)
    else:
        dataset = data.generate_synthetic(_parse_synthetic(args.synthetic))
    test = None
    if args.test_fraction is not None:
        dataset, test = data.split(dataset, args.test_fraction, args.split_seed)
    config = trainer.TrainConfig(
        lambda_reg=args.lambda_reg, epochs=args.epochs, seed=args.seed, use_bias=not args.no_bias
    )
    model = trainer.train_linear(dataset, config)
    save_model(model, args.model_out)
    if test is not None and args.test_out is not None:
        data.serialize_sparse(test, args.test_out)
    if args.train_out is not None:
        data.serialize_sparse(dataset, args.train_out)

    def accuracy(ds):
        prefix = prefix_score_matrix(model, ds.dense())
        labels = np.array([p.label for p in full_from_prefix(prefix, model.theta)])
        return float((labels == ds.y).mean())

    objective = trainer.hinge_objective(model, dataset, args.lambda_reg)
    row = [
        str(dataset.n_examples),
        str(dataset.dim),
        _fmt(args.lambda_reg),
        str(args.epochs),
        str(args.seed),
        _fmt(accuracy(dataset)),
        _fmt(accuracy(test)) if test is not None else "",
        _fmt(objective),
    ]
    _write_csv(
        args.output,
        ("examples", "dim", "lambda", "epochs", "seed", "train_accuracy", "test_accuracy", "objective"),
        [row],
    )
    return 0


def _cmd_calibrate(args) -> int:
    model = load_model(args.model)
    class_used = _class_label(args.class_used)
    if args.paper_faithful:
        if args.test is None:
            raise ParameterError("--paper-faithful needs --test (calibrates on the test set)")
        cal_set = data.parse_sparse(args.test)
        protocol = "paper-faithful"
    else:
        if args.train is None:
            raise ParameterError("calibrate needs --train (or --paper-faithful with --test)")
        cal_set = data.parse_sparse(args.train)
        if args.cal_fraction is not None:
            # the held-out slice plays the role of the calibration set
            _, cal_set = data.split(cal_set, args.cal_fraction, args.cal_seed)
        protocol = "train-slice"
    mode = "per_term" if args.mode == "per-term" else "score"
    calibrated, report = calibration.calibrate(model, cal_set, class_used, mode=mode)
    if args.model_out is not None:
        save_model(calibrated, args.model_out)
    row = [
        f"{report.class_used:+d}",
        str(report.n_calibration),
        _fmt(report.variance_hat),
        protocol,
        mode,
    ]
    _write_csv(
        args.output,
        ("class_used", "n_calibration", "variance_hat", "protocol", "mode"),
        [row],
    )
    return 0


def _cmd_sweep(args) -> int:
    model = load_model(args.model)
    test = data.parse_sparse(args.data)
    if args.grid == "exhaustive":
        grid = "exhaustive"
    else:
        try:
            grid = int(args.grid)
        except ValueError:
            raise ParameterError(f"grid must be an integer or 'exhaustive', got {args.grid!r}") from None
    records = bench.run_sweep(
        model, test, theta=args.theta, grid=grid, condition=_class_label(args.condition)
    )
    stream, owned = _open_output(args.output)
    try:
        bench.sweep_csv(records, stream)
    finally:
        if owned:
            stream.close()
    return 0


def _cmd_pr(args) -> int:
    model = load_model(args.model)
    test = data.parse_sparse(args.data)
    prefix = prefix_score_matrix(model, test.dense())
    if args.mode == "attentive":
        if args.tau is None:
            raise ParameterError("pr --mode attentive needs --tau")
        rule = StoppingRule(theta=args.theta, tau=args.tau, direction=Direction.REJECT_BELOW)
        preds = attentive_from_prefix(prefix, rule)
    else:
        preds = full_from_prefix(prefix, args.theta)
    scores = [p.reported_score for p in preds]
    points = bench.precision_recall(scores, test.y)
    stream, owned = _open_output(args.output)
    try:
        bench.pr_csv(points, stream)
    finally:
        if owned:
            stream.close()
    return 0


def _cmd_theory(args) -> int:
    kwargs = {}
    if args.n is not None:
        kwargs["n"] = args.n
    if args.bridge_trials is not None:
        kwargs["bridge_trials"] = args.bridge_trials
    if args.stop_error_trials is not None:
        kwargs["stop_error_trials"] = args.stop_error_trials
    if args.stopping_trials is not None:
        kwargs["stopping_trials"] = args.stopping_trials
    if args.seed is not None:
        kwargs["bridge_seed"] = args.seed
        kwargs["stop_error_seed"] = args.seed + 1
        kwargs["stopping_seed"] = args.seed + 2
    config = bench.TheoryConfig(**kwargs)
    results = bench.run_theory_suite(config)
    stream, owned = _open_output(args.output)
    try:
        bench.theory_csv(results, stream)
    finally:
        if owned:
            stream.close()
    return 0


def _cmd_simulate(args) -> int:
    spec = simulator.WalkSpec(
        n=args.n, step=args.step, scale=args.scale, drift=args.drift, seed=args.seed
    )
    if args.experiment == "bridge":
        est = simulator.empirical_bridge_crossing(
            spec, tau=args.tau, theta=args.theta, band=args.band, trials=args.trials, mode=args.mode
        )
        closed = math.exp(-2.0 * args.tau * (args.tau - args.theta) / spec.total_variance)
        rows = [
            simulator.TheoryRow(
                experiment="bridge_crossing",
                n=spec.n,
                delta=None,
                tau=args.tau,
                theta=args.theta,
                trials=est.trials_used,
                accepted=est.accepted,
                estimate=est.probability_hat,
                stderr=est.standard_error,
                closed_form=closed,
            )
        ]
    elif args.experiment == "stop-error":
        est = simulator.empirical_stop_error(spec, delta=args.delta, theta=args.theta, trials=args.trials)
        rows = [
            simulator.TheoryRow(
                experiment="stop_error",
                n=spec.n,
                delta=args.delta,
                tau=math.sqrt(-0.5 * math.log(args.delta) * spec.total_variance) + args.theta,
                theta=args.theta,
                trials=est.trials_used,
                accepted=est.accepted,
                estimate=est.probability_hat,
                stderr=est.standard_error,
                closed_form=args.delta,
            )
        ]
    else:  # stopping-time
        summary = simulator.empirical_stopping_time(spec, delta=args.delta, trials=args.trials)
        bound = expected_stop_bound(
            ConfidenceParams(delta=args.delta, variance=spec.total_variance),
            step_bound=spec.step_bound,
            drift=spec.drift,
        )
        rows = [
            simulator.TheoryRow(
                experiment="stopping_time",
                n=spec.n,
                delta=args.delta,
                tau=summary.tau,
                theta=0.0,
                trials=summary.trials,
                accepted=summary.trials - round(summary.censored_fraction * summary.trials),
                estimate=summary.mean_time,
                stderr=summary.se_time,
                closed_form=bound,
            )
        ]
    stream, owned = _open_output(args.output)
    try:
        simulator.write_theory_rows(rows, stream)
    finally:
        if owned:
            stream.close()
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stst",
        description="Early-stopping evaluation of weighted-sum predictors and its verification suite.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="key=value file supplying any flag; flags override")
        p.add_argument("--output", "-o", help="CSV output path (default stdout)")

    p = sub.add_parser("train", help="train a linear model by stochastic gradient descent")
    add_common(p)
    p.add_argument("--data", help="training set in sparse label index:value format")
    p.add_argument("--synthetic", help="synthetic spec, e.g. dim=20,n_pos=500,n_neg=500,sep=4,std=1,seed=7")
    p.add_argument("--test-fraction", type=float, help="hold out this fraction before training")
    p.add_argument("--split-seed", type=int, default=0)
    p.add_argument("--test-out", help="write the held-out split to this sparse file")
    p.add_argument("--train-out", help="write the (post-split) training set to this sparse file")
    p.add_argument("--lambda", dest="lambda_reg", type=float, default=0.01, help="regularization strength")
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-bias", action="store_true", help="train without a bias term")
    p.add_argument("--model-out", required=True, help="write the trained model container here")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("calibrate", help="estimate per-term corrections and score variance")
    add_common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--train", help="training set; a held-out slice of it calibrates (default protocol)")
    p.add_argument("--test", help="test set, used only with --paper-faithful")
    p.add_argument("--paper-faithful", action="store_true", help="calibrate on the test set itself")
    p.add_argument("--cal-fraction", type=float, help="fraction of --train carved out for calibration")
    p.add_argument("--cal-seed", type=int, default=0)
    p.add_argument("--class", dest="class_used", default="+1", help="class to center on (+1 or -1)")
    p.add_argument("--mode", choices=("score", "per-term"), default="score")
    p.add_argument("--model-out", help="write the calibrated model container here")
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("sweep", help="attentive vs matched-budget sweep over stop thresholds")
    add_common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True, help="test set in sparse format")
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--grid", default="50", help="number of grid points, or 'exhaustive'")
    p.add_argument("--condition", default="+1", help="full-pass label the stop-error conditions on")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("pr", help="precision-recall curve from reported scores")
    add_common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--mode", choices=("full", "attentive"), default="full")
    p.add_argument("--tau", type=float, help="stop threshold for attentive mode")
    p.set_defaults(func=_cmd_pr)

    p = sub.add_parser("theory", help="run the three verification experiments")
    add_common(p)
    p.add_argument("--n", type=int, help="walk length for the bridge and calibration checks")
    p.add_argument("--bridge-trials", type=int)
    p.add_argument("--stop-error-trials", type=int)
    p.add_argument("--stopping-trials", type=int)
    p.add_argument("--seed", type=int, help="base seed; omits to use the pinned defaults")
    p.set_defaults(func=_cmd_theory)

    p = sub.add_parser("simulate", help="run one walk experiment")
    add_common(p)
    p.add_argument("--experiment", choices=("bridge", "stop-error", "stopping-time"), required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--step", choices=("gaussian", "rademacher", "uniform"), default="gaussian")
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--drift", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--tau", type=float, help="boundary (bridge experiment)")
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--band", type=float, help="rejection half-width (bridge experiment)")
    p.add_argument("--mode", choices=("rejection", "exact"), default="rejection")
    p.add_argument("--delta", type=float, help="target rate (stop-error and stopping-time)")
    p.set_defaults(func=_cmd_simulate)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    # expand --config into tokens placed right after the subcommand so that
    # explicitly passed flags take precedence
    if argv and "--config" in argv:
        at = argv.index("--config")
        if at + 1 >= len(argv):
            parser.error("--config needs a path")
        try:
            tokens = _load_config_tokens(argv[at + 1])
        except OSError as exc:
            print(f"error: cannot read config: {exc}", file=sys.stderr)
            return 2
        del argv[at : at + 2]
        argv = argv[:1] + tokens + argv[1:]
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (StstError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
