"""Command-line front end.

Exit codes: 0 success, 1 input/output or validation error, 2 infeasible
projection, 3 singular confusion matrix.
"""

from __future__ import annotations

import argparse
import logging
import sys
import warnings
from pathlib import Path
from typing import Any, Callable, Sequence


from . import __version__
from .errors import (
    DarpError,
    DegenerateColumn,
    DegenerateRow,
    Infeasible,
    SingularConfusion,
)
from .estimator import aggregate_predictions, build_confusion, estimate_marginals
from .harness import (
    SCENARIO_DEFAULTS,
    class_counts,
    evaluate_summary,
    generate_biased_pseudolabels,
    read_scenario_file,
    scenario_from_mapping,
)
from .io import (
    dumps_json,
    read_indices,
    read_matrix,
    read_vector,
    write_json,
    write_matrix,
    write_vector,
)
from .refinery import DarpConfig, darp, mismatch
from .types import DEFAULT_ENTROPY_FLOOR, ConfusionMatrix, PseudoLabelMatrix

EXIT_OK = 0
EXIT_IO = 1
EXIT_INFEASIBLE = 2
EXIT_SINGULAR = 3


def _positive_or_inf(text: str) -> float:
    value = float(text)
    if not value > 0.0:
        raise argparse.ArgumentTypeError("must be positive (or 'inf')")
    return value


def manifest_path(output: str | Path) -> Path:
    p = Path(output)
    return p.with_name(p.stem + ".manifest.json")


def _manifest(command: str, inputs: dict, outputs: dict, config: dict, **extra: Any) -> dict:
    record = {
        "command": command,
        "inputs": inputs,
        "outputs": outputs,
        "config": config,
        "version": __version__,
    }
    record.update(extra)
    return record


def _relay_warnings(caught: list[warnings.WarningMessage]) -> list[str]:
    messages = []
    for w in caught:
        msg = str(w.message)
        messages.append(msg)
        print(f"warning: {msg}", file=sys.stderr)
    return messages


def cmd_refine(args: argparse.Namespace) -> int:
    labels = read_matrix(args.labels, header=args.header)
    marginals = read_vector(args.marginals, header=args.header)
    weights = None
    if args.weights in ("entropy", "uniform"):
        mode = args.weights
    else:
        mode = "external"
        weights = read_vector(args.weights, header=args.header)
    config = DarpConfig(
        delta=args.delta,
        iters=args.iters,
        outer_tol=args.tol,
        entropy_floor=args.entropy_floor,
        weight_mode=mode,
    )
    PseudoLabelMatrix(labels)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        refined, report = darp(labels, marginals, config, weights=weights)
    notes = _relay_warnings(caught)
    target = marginals * (labels.shape[0] / marginals.sum())

    write_matrix(args.out, refined.values)
    outputs: dict[str, str] = {"refined": str(args.out)}
    summary = report.summary()
    summary.update(
        mismatch_before=mismatch(labels, target),
        mismatch_after=mismatch(refined, target),
        warnings=notes,
        dual_objective_trace=report.dual_objective_trace,
    )
    if args.report:
        write_json(args.report, summary)
        outputs["report"] = str(args.report)
        if args.figures:
            from .plotting import plot_class_totals, plot_dual_trace

            stem = Path(args.report)
            trace_png = stem.with_name(stem.stem + ".dual_trace.png")
            totals_png = stem.with_name(stem.stem + ".class_totals.png")
            plot_dual_trace(report.dual_objective_trace, trace_png)
            plot_class_totals(totals_png, target, labels.sum(axis=0), refined.values.sum(axis=0))
            outputs.update(dual_trace_figure=str(trace_png), class_totals_figure=str(totals_png))
    inputs = {"labels": str(args.labels), "marginals": str(args.marginals)}
    if weights is not None:
        inputs["weights"] = str(args.weights)
    write_json(manifest_path(args.out), _manifest("refine", inputs, outputs, config.to_dict()))
    if not report.converged:
        print(
            f"warning: not converged after {report.iterations_run} updates "
            f"(column residual {report.col_residual:.3g})",
            file=sys.stderr,
        )
    return EXIT_OK


def cmd_estimate(args: argparse.Namespace) -> int:
    confusion = ConfusionMatrix(read_matrix(args.confusion, header=args.header))
    predictions = read_matrix(args.predictions, header=args.header)
    totals = aggregate_predictions(predictions)
    result = estimate_marginals(confusion, totals)
    if result.was_clamped:
        print("warning: negative class estimates were clamped to zero", file=sys.stderr)
    write_vector(args.out, result.marginals.mass)
    write_json(
        manifest_path(args.out),
        _manifest(
            "estimate",
            {"confusion": str(args.confusion), "predictions": str(args.predictions)},
            {"marginals": str(args.out)},
            {},
            diagnostics={"raw": result.raw, "condition": result.condition, "totals": totals},
        ),
    )
    return EXIT_OK


def cmd_build_confusion(args: argparse.Namespace) -> int:
    predictions = read_matrix(args.predictions, header=args.header)
    truth = read_indices(args.truth, header=args.header)
    confusion = build_confusion(predictions, truth)
    write_matrix(args.out, confusion.values)
    write_json(
        manifest_path(args.out),
        _manifest(
            "build-confusion",
            {"predictions": str(args.predictions), "truth": str(args.truth)},
            {"confusion": str(args.out)},
            {},
        ),
    )
    return EXIT_OK


def _scenario_values(args: argparse.Namespace) -> dict[str, Any]:
    values: dict[str, Any] = {}
    if args.config:
        values.update(read_scenario_file(args.config))
    for key in SCENARIO_DEFAULTS:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    return values


def cmd_simulate(args: argparse.Namespace) -> int:
    scenario = scenario_from_mapping(_scenario_values(args))
    probs, truth, counts = generate_biased_pseudolabels(scenario)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    k = scenario.num_classes
    pred = probs.argmax(axis=1)
    summary = evaluate_summary(pred, truth, k, labels=probs)

    paths = {
        "labels": out / "labels.csv",
        "truth": out / "truth.csv",
        "marginals": out / "marginals.csv",
        "summary": out / "summary.json",
    }
    write_matrix(paths["labels"], probs)
    write_vector(paths["truth"], truth)
    write_vector(paths["marginals"], counts)
    write_json(paths["summary"], summary)
    if args.figures:
        from .plotting import plot_class_distribution, plot_class_totals

        paths["class_distribution_figure"] = plot_class_distribution(
            out / "class_distribution.png", class_counts(scenario.profile_labeled), counts
        )
        paths["class_totals_figure"] = plot_class_totals(
            out / "class_totals.png", counts, probs.sum(axis=0), title="pseudo-label totals"
        )
    outputs = {name: str(p) for name, p in paths.items()}
    write_json(out / "manifest.json", _manifest("simulate", {}, outputs, scenario.to_dict()))
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    truth = read_indices(args.truth, header=args.header)
    labels = None
    if args.labels:
        labels = read_matrix(args.labels, header=args.header)
        pred = labels.argmax(axis=1)
    else:
        pred = read_indices(args.pred, header=args.header)
    if args.num_classes:
        k = args.num_classes
    elif labels is not None:
        k = labels.shape[1]
    else:
        k = int(max(pred.max(), truth.max())) + 1
    summary = evaluate_summary(pred, truth, k, labels=labels)
    text = dumps_json(summary)
    sys.stdout.write(text)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        inputs = {"truth": str(args.truth)}
        inputs["labels" if args.labels else "pred"] = str(args.labels or args.pred)
        write_json(
            manifest_path(args.out),
            _manifest("evaluate", inputs, {"summary": str(args.out)}, {"num_classes": k}),
        )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="darp",
        description="Refine biased pseudo-labels toward a target class distribution.",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    fmt = argparse.ArgumentDefaultsHelpFormatter

    def add(name: str, func: Callable[[argparse.Namespace], int], help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text, description=help_text, formatter_class=fmt)
        p.add_argument("--header", action="store_true", help="skip one header line in every input CSV")
        p.set_defaults(func=func)
        return p

    p = add("refine", cmd_refine, "refine a pseudo-label matrix to match class marginals")
    p.add_argument("--labels", required=True, help="M x K pseudo-label CSV")
    p.add_argument("--marginals", required=True, help="single-line CSV of K target class totals")
    p.add_argument("--out", required=True, help="refined matrix CSV")
    p.add_argument("--delta", type=_positive_or_inf, default=2.0, help="clipping ratio; 'inf' disables clipping")
    p.add_argument("--iters", type=int, default=10, help="number of dual updates T")
    p.add_argument("--weights", default="entropy", help="'entropy', 'uniform', or a CSV of M weights")
    p.add_argument("--tol", type=float, default=1e-6, help="relative column-residual tolerance")
    p.add_argument("--entropy-floor", type=float, default=DEFAULT_ENTROPY_FLOOR, help="lower clamp on row entropy")
    p.add_argument("--report", help="JSON report path; figures are written next to it")
    p.add_argument("--no-figures", dest="figures", action="store_false", help="skip figures")

    p = add("estimate", cmd_estimate, "estimate class totals from a confusion matrix")
    p.add_argument("--confusion", required=True, help="K x K column-stochastic CSV")
    p.add_argument("--predictions", required=True, help="M x K prediction CSV")
    p.add_argument("--out", required=True, help="single-line CSV of estimated totals")

    p = add("build-confusion", cmd_build_confusion, "build a confusion matrix from held-out predictions")
    p.add_argument("--predictions", required=True, help="N x K prediction CSV")
    p.add_argument("--truth", required=True, help="CSV of N true class indices")
    p.add_argument("--out", required=True, help="K x K confusion CSV")

    p = add("simulate", cmd_simulate, "generate a synthetic long-tailed pseudo-label scenario")
    p.add_argument("--config", help="key=value scenario file; flags override it")
    p.add_argument("--out-dir", required=True)
    d = SCENARIO_DEFAULTS
    p.add_argument("--num-classes", dest="num_classes", type=int, help=f"default {d['num_classes']}")
    p.add_argument("--labeled-head", dest="labeled_head", type=int, help=f"default {d['labeled_head']}")
    p.add_argument("--labeled-ratio", dest="labeled_ratio", type=float, help=f"default {d['labeled_ratio']}")
    p.add_argument("--unlabeled-head", dest="unlabeled_head", type=int, help=f"default {d['unlabeled_head']}")
    p.add_argument("--unlabeled-ratio", dest="unlabeled_ratio", type=float, help=f"default {d['unlabeled_ratio']}")
    p.add_argument("--unlabeled-reversed", dest="unlabeled_reversed", action="store_const", const=True,
                   help="reverse the unlabeled profile")
    p.add_argument("--bias-strength", dest="bias_strength", type=float, help=f"default {d['bias_strength']}")
    p.add_argument("--noise-temp", dest="noise_temp", type=float, help=f"default {d['noise_temp']}")
    p.add_argument("--seed", type=int, help=f"default {d['seed']}")
    p.add_argument("--no-figures", dest="figures", action="store_false", help="skip figures")

    p = add("evaluate", cmd_evaluate, "balanced accuracy, geometric mean and mismatch as JSON")
    p.add_argument("--truth", required=True, help="CSV of true class indices")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--pred", help="CSV of predicted class indices")
    src.add_argument("--labels", help="M x K soft-label CSV; predictions are the row argmax")
    p.add_argument("--num-classes", type=int, help="defaults to the label width or the largest index + 1")
    p.add_argument("--out", help="also write the summary JSON here")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s", stream=sys.stderr)
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (Infeasible, DegenerateColumn, DegenerateRow) as exc:
        print(f"error: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except SingularConfusion as exc:
        print(f"error: singular confusion matrix: {exc}", file=sys.stderr)
        return EXIT_SINGULAR
    except (OSError, DarpError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
