"""Command-line interface.

Subcommands: find (run the search on a CSV), generate (synthesize a model
and dataset), bench (run a benchmark protocol). Machine-readable output is
JSON with sorted keys and no timings, so a rerun with the same inputs and
seed produces byte-identical files; wall-clock timings go to the human
summary on stderr.

Exit codes: 0 success, 2 malformed input (messages name the offending line
or column), 3 degenerate data under --strict.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
import warnings

import numpy as np

from . import __version__
from .bench import (
    experiment1,
    experiment2,
    write_curves_csv,
    write_manifest,
    write_records_csv,
)
from .data import DataMatrix, atomic_write_text, load_csv, load_group_labels, save_csv
from .exceptions import (
    ConstantColumnWarning,
    CsvFormatError,
    DegenerateSeries,
    EggFinderError,
    LabelLengthMismatch,
    TooFewObservations,
)
from .finder import EggFinder, bootstrap_selection, flag_significant, with_significance
from .stats import group_mean_center, welch_t_test
from .synth import generate, save_model

G_CHOICES = {"robust": "robust_exp", "kurtosis": "kurtosis"}
SEED_ENV_VAR = "EGGFINDER_SEED"
FLAG_LEVEL = 0.05


def _resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV_VAR)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise CsvFormatError(
                f"{SEED_ENV_VAR}={env!r} is not an integer"
            ) from None
    return 0


def _comma_ints(text: str) -> list[int]:
    try:
        values = [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a comma-separated int list")
    if not values:
        raise argparse.ArgumentTypeError("empty grid")
    return values


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eggfinder",
        description="Find exogenous-variable candidates in multivariate data.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command")

    find = sub.add_parser("find", help="run the search on a CSV data matrix")
    find.add_argument("input", help="CSV file, observations in rows unless --transpose")
    find.add_argument("-o", "--output", help="write the JSON report here instead of stdout")
    find.add_argument("--fdr", type=float, default=0.05, help="per-round FDR level (default 0.05)")
    find.add_argument("--g", choices=sorted(G_CHOICES), default="robust", help="contrast function")
    find.add_argument("--bootstrap", type=int, default=0, metavar="B", help="bootstrap resamples (0 = off)")
    find.add_argument("--seed", type=int, default=None, help=f"RNG seed (default ${SEED_ENV_VAR} or 0)")
    find.add_argument("--groups", metavar="FILE", help="one group label per observation; group means are removed")
    find.add_argument("--select-top", type=int, metavar="K", help="keep only the K variables separating the --contrast groups best (Welch t-test)")
    find.add_argument("--contrast", nargs=2, metavar=("A", "B"), help="group labels compared by --select-top")
    find.add_argument("--max-candidates", type=int, default=None, help="stop after this many selections")
    find.add_argument("--trace", choices=("none", "summary", "full"), default="summary", help="iteration detail in the report")
    find.add_argument("--transpose", action="store_true", help="input has variables in rows")
    find.add_argument("--strict", action="store_true", help="treat degenerate columns as errors (exit 3)")
    find.set_defaults(func=cmd_find)

    gen = sub.add_parser("generate", help="synthesize a model and a dataset")
    gen.add_argument("--p", type=int, required=True, help="number of variables")
    gen.add_argument("--edges", type=int, required=True, help="number of edges")
    gen.add_argument("--h", type=int, default=1, help="error influence terms per variable (default 1)")
    gen.add_argument("--n", type=int, required=True, help="number of observations")
    gen.add_argument("--seed", type=int, default=None, help=f"RNG seed (default ${SEED_ENV_VAR} or 0)")
    gen.add_argument("--data", required=True, metavar="FILE", help="write the dataset CSV here")
    gen.add_argument("--model", metavar="FILE", help="write the model JSON here")
    gen.set_defaults(func=cmd_generate)

    bench = sub.add_parser("bench", help="run a benchmark protocol")
    bench_sub = bench.add_subparsers(dest="protocol")

    exp1 = bench_sub.add_parser("exp1", help="top-m curves over an (n, h) grid")
    exp1.add_argument("--p", type=int, required=True)
    exp1.add_argument("--edges", type=int, required=True)
    exp1.add_argument("--n-grid", type=_comma_ints, required=True, metavar="N1,N2,...")
    exp1.add_argument("--h-grid", type=_comma_ints, required=True, metavar="H1,H2,...")
    exp1.add_argument("--datasets", type=int, required=True, help="datasets per grid cell")
    exp1.add_argument("--seed", type=int, default=None)
    exp1.add_argument("--out", required=True, metavar="DIR", help="output directory")
    exp1.add_argument("--fdr", type=float, default=0.05)
    exp1.add_argument("--g", choices=sorted(G_CHOICES), default="robust")
    exp1.add_argument("--m-max", type=int, default=10)
    exp1.add_argument("--model-policy", choices=("shared", "per_dataset"), default="shared")
    exp1.set_defaults(func=cmd_bench_exp1)

    exp2 = bench_sub.add_parser("exp2", help="precision/recall/time across dimensions")
    exp2.add_argument("--p-grid", type=_comma_ints, required=True, metavar="P1,P2,...")
    exp2.add_argument("--n", type=int, required=True)
    exp2.add_argument("--h", type=int, required=True)
    exp2.add_argument("--edges", type=int, default=None, help="edge count (default: same as p)")
    exp2.add_argument("--datasets", type=int, required=True, help="datasets per dimension")
    exp2.add_argument("--seed", type=int, default=None)
    exp2.add_argument("--out", required=True, metavar="DIR")
    exp2.add_argument("--fdr", type=float, default=0.05)
    exp2.add_argument("--g", choices=sorted(G_CHOICES), default="robust")
    exp2.add_argument("--model-policy", choices=("shared", "per_dataset"), default="per_dataset")
    exp2.set_defaults(func=cmd_bench_exp2)

    return parser


def _emit(text: str, output: str | None) -> None:
    if output:
        atomic_write_text(output, text)
    else:
        sys.stdout.write(text)


def _welch_select(data: DataMatrix, labels, contrast, k: int, strict: bool):
    """Keep the k columns separating the two contrast groups best."""
    group_a, group_b = contrast
    rows_a = np.asarray([lab == group_a for lab in labels])
    rows_b = np.asarray([lab == group_b for lab in labels])
    for name, rows in ((group_a, rows_a), (group_b, rows_b)):
        if rows.sum() < 2:
            raise CsvFormatError(
                f"contrast group {name!r} has {int(rows.sum())} observations, need >= 2"
            )
    if k < 1 or k > data.n_variables:
        raise CsvFormatError(
            f"--select-top {k} out of range for {data.n_variables} variables"
        )
    pvalues = np.empty(data.n_variables)
    undefined = []
    for j, name in enumerate(data.variable_names):
        column = data.values[:, j]
        try:
            pvalues[j] = welch_t_test(column[rows_a], column[rows_b])
        except DegenerateSeries:
            if strict:
                raise DegenerateSeries(
                    f"column '{name}' is constant within both contrast groups"
                ) from None
            pvalues[j] = np.nan
            undefined.append(name)
    order = np.argsort(pvalues, kind="stable")  # NaN sorts last
    keep = sorted(int(j) for j in order[:k])
    return data.select(keep), undefined


def cmd_find(args) -> int:
    if args.select_top is not None and (args.groups is None or args.contrast is None):
        raise CsvFormatError("--select-top needs both --groups and --contrast")
    if args.contrast is not None and args.select_top is None:
        raise CsvFormatError("--contrast only makes sense with --select-top")

    raw = load_csv(args.input, transpose=args.transpose)
    n_raw, p_raw = raw.n_observations, raw.n_variables
    with open(args.input, "rb") as handle:
        input_sha256 = hashlib.sha256(handle.read()).hexdigest()

    labels = None
    if args.groups:
        labels = load_group_labels(args.groups)
        if len(labels) != raw.n_observations:
            raise LabelLengthMismatch(
                f"{len(labels)} labels in {args.groups} for {raw.n_observations} observations"
            )
        present = set(labels)
        if args.contrast is not None:
            for name in args.contrast:
                if name not in present:
                    raise CsvFormatError(f"contrast group {name!r} not found in {args.groups}")

    data = raw
    welch_undefined: list[str] = []
    if args.select_top is not None:
        data, welch_undefined = _welch_select(
            data, labels, args.contrast, args.select_top, args.strict
        )
        if welch_undefined:
            print(
                f"note: Welch test undefined for {len(welch_undefined)} column(s), ranked last",
                file=sys.stderr,
            )
    if labels is not None:
        data = group_mean_center(data, labels)

    estimator = EggFinder(
        fdr_level=args.fdr,
        g_function=G_CHOICES[args.g],
        max_candidates=args.max_candidates,
        on_constant="raise" if args.strict else "exclude",
    )
    start = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConstantColumnWarning)
        estimator.fit(data.values)
    fit_elapsed = time.perf_counter() - start

    names = data.variable_names
    excluded_names = [names[i] for i in estimator.excluded_constant_]
    if excluded_names:
        print(
            f"note: excluded {len(excluded_names)} constant column(s): "
            + ", ".join(excluded_names),
            file=sys.stderr,
        )

    bootstrap_block = None
    bootstrap_elapsed = None
    seed = None
    if args.bootstrap > 0:
        seed = _resolve_seed(args)
        start = time.perf_counter()
        report = bootstrap_selection(estimator, data.values, args.bootstrap, seed)
        bootstrap_elapsed = time.perf_counter() - start
        report = with_significance(report, FLAG_LEVEL)
        flagged = flag_significant(report, FLAG_LEVEL)
        bootstrap_block = {
            "resamples": report.n_resamples,
            "seed": report.seed,
            "null_rate": len(report.full_data_candidates) / report.n_variables,
            "significance_level": FLAG_LEVEL,
            "constant_exclusion_rounds": report.constant_exclusion_rounds,
            "proportions": {
                names[i]: report.proportions[i]
                for i in range(report.n_variables)
                if report.counts[i] > 0
            },
            "flagged": sorted(names[i] for i in flagged),
        }

    payload = {
        "format": "eggfinder-run-report",
        "format_version": 1,
        "input": {
            "path": args.input,
            "sha256": input_sha256,
            "n_observations": n_raw,
            "n_variables": p_raw,
            "transpose": bool(args.transpose),
        },
        "preprocessing": {
            "groups": args.groups,
            "group_centering": labels is not None,
            "select_top": args.select_top,
            "contrast": list(args.contrast) if args.contrast else None,
            "selected_variables": list(names) if args.select_top is not None else None,
            "welch_undefined": welch_undefined or None,
        },
        "config": {
            "fdr_level": args.fdr,
            "g_function": G_CHOICES[args.g],
            "max_candidates": args.max_candidates,
            "strict": bool(args.strict),
            "bootstrap_resamples": args.bootstrap,
            "seed": seed,
        },
        "excluded_constant": excluded_names,
        "candidates": [
            {
                "rank": rank + 1,
                "index": int(index),
                "name": names[int(index)],
                "j_value": float(estimator.candidate_scores_[rank]),
            }
            for rank, index in enumerate(estimator.candidates_)
        ],
        "iterations": _trace_block(estimator, names, args.trace),
        "bootstrap": bootstrap_block,
    }
    _emit(json.dumps(payload, indent=2, sort_keys=True) + "\n", args.output)

    summary = (
        f"{n_raw} observations, {p_raw} variables; "
        f"{len(estimator.candidates_)} candidate(s) in {fit_elapsed:.2f}s"
    )
    if bootstrap_block is not None:
        summary += (
            f"; bootstrap B={args.bootstrap} flagged {len(bootstrap_block['flagged'])}"
            f" at {FLAG_LEVEL:.0%} in {bootstrap_elapsed:.2f}s"
        )
    print(summary, file=sys.stderr)
    return 0


def _trace_block(estimator: EggFinder, names, level: str):
    if level == "none":
        return None
    block = []
    for trace in estimator.iterations_:
        entry = {
            "iteration": trace.iteration,
            "selected_index": int(trace.selected),
            "selected_name": names[trace.selected],
            "j_value": trace.selected_score.j_value,
            "n_surviving_before": len(trace.surviving_before),
            "n_removed": len(trace.removed_by_correlation),
            "tests_run": trace.tests_run,
            "tests_rejected": trace.tests_rejected,
        }
        if level == "full":
            entry["removed"] = [names[i] for i in trace.removed_by_correlation]
            entry["rejected_pairs"] = [
                [names[i], names[e]] for i, e in trace.rejected_pairs
            ]
        block.append(entry)
    return block


def cmd_generate(args) -> int:
    seed = _resolve_seed(args)
    model, data = generate(args.p, args.edges, args.h, args.n, seed)
    save_csv(data, args.data)
    if args.model:
        save_model(model, args.model)
    print(
        f"generated p={args.p} edges={args.edges} h={args.h} n={args.n} seed={seed}; "
        f"{len(model.exogenous_set)} exogenous variable(s); wrote {args.data}"
        + (f" and {args.model}" if args.model else ""),
        file=sys.stderr,
    )
    return 0


def _bench_common(args, parameters: dict) -> dict:
    parameters.update(
        {
            "fdr_level": args.fdr,
            "g_function": G_CHOICES[args.g],
            "model_policy": args.model_policy,
            "package_version": __version__,
        }
    )
    return parameters


def cmd_bench_exp1(args) -> int:
    seed = _resolve_seed(args)
    os.makedirs(args.out, exist_ok=True)
    start = time.perf_counter()
    curves = experiment1(
        args.p,
        args.edges,
        args.n_grid,
        args.h_grid,
        args.datasets,
        seed,
        fdr_level=args.fdr,
        g_function=G_CHOICES[args.g],
        m_max=args.m_max,
        model_policy=args.model_policy,
    )
    elapsed = time.perf_counter() - start
    curves_path = os.path.join(args.out, "curves.csv")
    write_curves_csv(curves, curves_path)
    parameters = _bench_common(
        args,
        {
            "p": args.p,
            "edges": args.edges,
            "n_grid": args.n_grid,
            "h_grid": args.h_grid,
            "datasets_per_cell": args.datasets,
            "m_max": args.m_max,
            "seed": seed,
        },
    )
    write_manifest(os.path.join(args.out, "manifest.json"), "exp1", parameters, ["curves.csv"])
    print(
        f"exp1: {len(curves)} cells x {args.datasets} datasets in {elapsed:.1f}s; wrote {curves_path}",
        file=sys.stderr,
    )
    return 0


def cmd_bench_exp2(args) -> int:
    seed = _resolve_seed(args)
    os.makedirs(args.out, exist_ok=True)
    start = time.perf_counter()
    summaries = experiment2(
        args.p_grid,
        args.n,
        args.h,
        args.datasets,
        seed,
        edge_count=args.edges,
        fdr_level=args.fdr,
        g_function=G_CHOICES[args.g],
        model_policy=args.model_policy,
    )
    elapsed = time.perf_counter() - start
    records_path = os.path.join(args.out, "records.csv")
    write_records_csv(summaries, records_path)
    parameters = _bench_common(
        args,
        {
            "p_grid": args.p_grid,
            "n": args.n,
            "h": args.h,
            "edges": args.edges,
            "datasets_per_p": args.datasets,
            "seed": seed,
        },
    )
    write_manifest(os.path.join(args.out, "manifest.json"), "exp2", parameters, ["records.csv"])
    for s in summaries:
        print(
            f"exp2 p={s.p}: median precision="
            + ("n/a" if s.median_precision is None else f"{s.median_precision:.3f}")
            + f" recall={s.median_recall:.3f} time={s.median_elapsed_seconds:.2f}s",
            file=sys.stderr,
        )
    print(f"exp2 finished in {elapsed:.1f}s; wrote {records_path}", file=sys.stderr)
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "func"):
        parser.print_help(file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except DegenerateSeries as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (
        CsvFormatError,
        LabelLengthMismatch,
        TooFewObservations,
        EggFinderError,
        OSError,
        ValueError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
