"""Synthetic benchmark harness.

Two protocols. experiment1 fixes the dimension and sweeps sample size and
influence complexity, recording how often the first m selections are all
truly exogenous. experiment2 sweeps the dimension at fixed sample size,
recording precision, recall, and wall time per dataset. Both emit flat CSV
files ready for plotting plus a JSON manifest describing the run.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass

from ._rng import as_seed_sequence, child
from .data import atomic_write_text
from .finder import EggFinder
from .synth import random_model, sample_dataset

CURVES_HEADER = ("p", "n", "h", "edges", "datasets", "m", "percentage")
RECORDS_HEADER = (
    "p",
    "n",
    "h",
    "edges",
    "dataset",
    "precision",
    "recall",
    "elapsed_seconds",
    "candidates",
    "exogenous",
)

MANIFEST_FORMAT = "eggfinder-benchmark-manifest"
MANIFEST_FORMAT_VERSION = 1

MODEL_POLICIES = ("shared", "per_dataset")


@dataclass(frozen=True)
class TopMCurve:
    """Top-m success percentages for one (p, n, h, edges) cell."""

    p: int
    n: int
    h: int
    edge_count: int
    dataset_count: int
    percentages: dict

    def percentage(self, m: int) -> float:
        return self.percentages[m]


@dataclass(frozen=True)
class PrecisionRecallRecord:
    """Scores of one run on one dataset.

    precision is None when the run selected nothing (0/0 has no value);
    recall is always defined because an acyclic model has at least one
    exogenous variable.
    """

    dataset: int
    precision: float | None
    recall: float
    elapsed_seconds: float
    n_candidates: int
    n_exogenous: int


@dataclass(frozen=True)
class ScalingSummary:
    """All records of one dimension cell plus their medians.

    Medians are lower-middle (the smaller of the two central order
    statistics when the count is even), so every reported median is a value
    that actually occurred. median_precision skips records with undefined
    precision and is None when none had one.
    """

    p: int
    n: int
    h: int
    edge_count: int
    records: tuple
    median_precision: float | None
    median_recall: float
    median_elapsed_seconds: float


def lower_median(values):
    """The lower-middle order statistic. Rejects empty input."""
    ordered = sorted(values)
    if not ordered:
        raise ValueError("lower_median of an empty sequence")
    return ordered[(len(ordered) - 1) // 2]


def top_m_percentages(runs, m_max: int = 10) -> dict:
    """Fraction of runs whose first m selections are all truly exogenous.

    Parameters
    ----------
    runs : iterable of (candidates, exogenous_set)
        candidates in selection order; exogenous_set the true exogenous
        indices of the model that produced that dataset.
    m_max : int
        Largest m to report.

    Returns
    -------
    dict mapping m in 1..m_max to a fraction in [0, 1]. A run with fewer
    than m selections counts as a failure at that m, so the curve is
    non-increasing in m by construction.
    """
    if m_max < 1:
        raise ValueError(f"m_max must be >= 1, got {m_max}")
    pairs = [(tuple(cands), frozenset(exo)) for cands, exo in runs]
    if not pairs:
        raise ValueError("need at least one run")
    out = {}
    for m in range(1, m_max + 1):
        hits = sum(
            1
            for cands, exo in pairs
            if len(cands) >= m and all(c in exo for c in cands[:m])
        )
        out[m] = hits / len(pairs)
    return out


def _check_policy(model_policy: str) -> None:
    if model_policy not in MODEL_POLICIES:
        raise ValueError(
            f"model_policy must be one of {MODEL_POLICIES}, got {model_policy!r}"
        )


def experiment1(
    p: int,
    edge_count: int,
    n_grid,
    h_grid,
    datasets_per_cell: int,
    seed=None,
    *,
    fdr_level: float = 0.05,
    g_function: str = "robust_exp",
    m_max: int = 10,
    model_policy: str = "shared",
) -> list[TopMCurve]:
    """Top-m curves over a sample-size by influence-complexity grid.

    With model_policy="shared" (default) one graph with one set of
    coefficients underlies the whole grid: h only changes the error
    influence mixtures, which the seeding guarantees leaves structure and
    coefficients untouched. "per_dataset" draws a fresh model for every
    dataset instead.
    """
    _check_policy(model_policy)
    if datasets_per_cell < 1:
        raise ValueError(f"datasets_per_cell must be >= 1, got {datasets_per_cell}")
    root = as_seed_sequence(seed)
    model_root, data_root = child(root, 0), child(root, 1)
    shared = {}
    if model_policy == "shared":
        shared = {h: random_model(p, edge_count, h, model_root) for h in h_grid}
    curves = []
    cells = [(h, n) for h in h_grid for n in n_grid]
    for index, (h, n) in enumerate(cells):
        cell_root = child(data_root, index)
        runs = []
        for d in range(datasets_per_cell):
            dataset_root = child(cell_root, d)
            if model_policy == "shared":
                model = shared[h]
                data_seed = dataset_root
            else:
                model = random_model(p, edge_count, h, child(dataset_root, 0))
                data_seed = child(dataset_root, 1)
            data = sample_dataset(model, n, data_seed)
            est = EggFinder(fdr_level=fdr_level, g_function=g_function).fit(data.values)
            runs.append((tuple(int(c) for c in est.candidates_), model.exogenous_set))
        curves.append(
            TopMCurve(
                p=p,
                n=n,
                h=h,
                edge_count=edge_count,
                dataset_count=datasets_per_cell,
                percentages=top_m_percentages(runs, m_max),
            )
        )
    return curves


def experiment2(
    p_grid,
    n: int,
    h: int,
    datasets_per_p: int,
    seed=None,
    *,
    edge_count: int | None = None,
    fdr_level: float = 0.05,
    g_function: str = "robust_exp",
    model_policy: str = "per_dataset",
) -> list[ScalingSummary]:
    """Precision, recall, and wall time as the dimension grows.

    edge_count=None uses as many edges as variables, which keeps average
    connectivity fixed across the sweep. model_policy="per_dataset"
    (default) draws a fresh model per dataset so the medians aggregate over
    graphs as well as noise; "shared" reuses one model per dimension.
    """
    _check_policy(model_policy)
    if datasets_per_p < 1:
        raise ValueError(f"datasets_per_p must be >= 1, got {datasets_per_p}")
    root = as_seed_sequence(seed)
    summaries = []
    for pi, p in enumerate(p_grid):
        edges = p if edge_count is None else edge_count
        p_root = child(root, pi)
        model_root, data_root = child(p_root, 0), child(p_root, 1)
        shared_model = None
        if model_policy == "shared":
            shared_model = random_model(p, edges, h, model_root)
        records = []
        for d in range(datasets_per_p):
            dataset_root = child(data_root, d)
            if shared_model is not None:
                model = shared_model
                data_seed = dataset_root
            else:
                model = random_model(p, edges, h, child(dataset_root, 0))
                data_seed = child(dataset_root, 1)
            data = sample_dataset(model, n, data_seed)
            start = time.perf_counter()
            est = EggFinder(fdr_level=fdr_level, g_function=g_function).fit(data.values)
            elapsed = time.perf_counter() - start
            selected = set(int(c) for c in est.candidates_)
            true_exo = model.exogenous_set
            true_positives = len(selected & true_exo)
            records.append(
                PrecisionRecallRecord(
                    dataset=d,
                    precision=true_positives / len(selected) if selected else None,
                    recall=true_positives / len(true_exo),
                    elapsed_seconds=elapsed,
                    n_candidates=len(selected),
                    n_exogenous=len(true_exo),
                )
            )
        precisions = [r.precision for r in records if r.precision is not None]
        summaries.append(
            ScalingSummary(
                p=p,
                n=n,
                h=h,
                edge_count=edges,
                records=tuple(records),
                median_precision=lower_median(precisions) if precisions else None,
                median_recall=lower_median([r.recall for r in records]),
                median_elapsed_seconds=lower_median(
                    [r.elapsed_seconds for r in records]
                ),
            )
        )
    return summaries


def write_curves_csv(curves, path) -> None:
    """Flat plot-ready rows, one per (cell, m). Numbers use repr so a read
    round-trips exactly."""
    lines = [",".join(CURVES_HEADER)]
    for curve in curves:
        for m in sorted(curve.percentages):
            lines.append(
                ",".join(
                    [
                        str(curve.p),
                        str(curve.n),
                        str(curve.h),
                        str(curve.edge_count),
                        str(curve.dataset_count),
                        str(m),
                        repr(float(curve.percentages[m])),
                    ]
                )
            )
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_curves_csv(path) -> list[TopMCurve]:
    with open(path, newline="", encoding="utf-8") as handle:
        rows = list(csv.reader(handle))
    if not rows or tuple(rows[0]) != CURVES_HEADER:
        raise ValueError(f"{path}: expected header {','.join(CURVES_HEADER)}")
    cells: dict[tuple, dict] = {}
    for row in rows[1:]:
        p, n, h, edges, datasets, m, pct = row
        key = (int(p), int(n), int(h), int(edges), int(datasets))
        cells.setdefault(key, {})[int(m)] = float(pct)
    return [
        TopMCurve(
            p=key[0],
            n=key[1],
            h=key[2],
            edge_count=key[3],
            dataset_count=key[4],
            percentages=percentages,
        )
        for key, percentages in cells.items()
    ]


def write_records_csv(summaries, path) -> None:
    """One row per dataset; empty precision cell when it was undefined."""
    lines = [",".join(RECORDS_HEADER)]
    for summary in summaries:
        for r in summary.records:
            lines.append(
                ",".join(
                    [
                        str(summary.p),
                        str(summary.n),
                        str(summary.h),
                        str(summary.edge_count),
                        str(r.dataset),
                        "" if r.precision is None else repr(float(r.precision)),
                        repr(float(r.recall)),
                        repr(float(r.elapsed_seconds)),
                        str(r.n_candidates),
                        str(r.n_exogenous),
                    ]
                )
            )
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_records_csv(path) -> list[ScalingSummary]:
    """Rebuild summaries from a records file; medians are recomputed."""
    with open(path, newline="", encoding="utf-8") as handle:
        rows = list(csv.reader(handle))
    if not rows or tuple(rows[0]) != RECORDS_HEADER:
        raise ValueError(f"{path}: expected header {','.join(RECORDS_HEADER)}")
    cells: dict[tuple, list] = {}
    for row in rows[1:]:
        p, n, h, edges, dataset, precision, recall, elapsed, cands, exo = row
        key = (int(p), int(n), int(h), int(edges))
        cells.setdefault(key, []).append(
            PrecisionRecallRecord(
                dataset=int(dataset),
                precision=None if precision == "" else float(precision),
                recall=float(recall),
                elapsed_seconds=float(elapsed),
                n_candidates=int(cands),
                n_exogenous=int(exo),
            )
        )
    summaries = []
    for (p, n, h, edges), records in cells.items():
        precisions = [r.precision for r in records if r.precision is not None]
        summaries.append(
            ScalingSummary(
                p=p,
                n=n,
                h=h,
                edge_count=edges,
                records=tuple(records),
                median_precision=lower_median(precisions) if precisions else None,
                median_recall=lower_median([r.recall for r in records]),
                median_elapsed_seconds=lower_median(
                    [r.elapsed_seconds for r in records]
                ),
            )
        )
    return summaries


def write_manifest(path, experiment: str, parameters: dict, outputs) -> None:
    """JSON manifest naming the protocol, its parameters, and the files it
    produced."""
    payload = {
        "format": MANIFEST_FORMAT,
        "format_version": MANIFEST_FORMAT_VERSION,
        "experiment": experiment,
        "parameters": parameters,
        "outputs": list(outputs),
    }
    atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")
