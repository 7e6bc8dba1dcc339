"""Statistical aggregation, log histograms, and byte-stable file emission.

All writers are deterministic for fixed inputs: metadata lines are sorted,
floats are rendered with ``repr`` (shortest round-trip form), and no
timestamps or environment details are embedded.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from typing import Iterable, Optional

from .sim import RunOutcome

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Aggregate:
    """min/max/mean/std summary of the uncensored taus at one config point.

    std is the population standard deviation.  Censored (step-cap) runs are
    excluded from the moments but always reported in censored_count.
    """

    config_id: str
    count: int
    min: int
    max: int
    mean: float
    std: float
    censored_count: int


def aggregate(outcomes: list[RunOutcome], config_id: str = "") -> Aggregate:
    if not outcomes:
        raise ValueError("cannot aggregate an empty outcome list")
    taus = [o.tau for o in outcomes if not o.censored]
    censored = len(outcomes) - len(taus)
    if not taus:
        raise ValueError("all runs were censored; no moments to report")
    # integer moments keep the result exactly permutation-invariant
    count = len(taus)
    total = sum(taus)
    var_num = sum((count * t - total) ** 2 for t in taus)
    return Aggregate(
        config_id=config_id,
        count=count,
        min=min(taus),
        max=max(taus),
        mean=total / count,
        std=math.sqrt(var_num / count ** 3),
        censored_count=censored,
    )


@dataclass
class LogHistogram:
    """Base-10 logarithmic histogram.

    ``edges`` has len(counts)+1 entries: bin i covers [edges[i], edges[i+1]).
    Nonpositive values cannot be binned and are counted as underflow; values
    above an explicit ``max_value`` range land in overflow.
    """

    bins_per_decade: int
    edges: list[float]
    counts: list[int]
    underflow: int
    overflow: int


def log_histogram(values: Iterable[float], bins_per_decade: int = 1,
                  max_value: Optional[float] = None) -> LogHistogram:
    if bins_per_decade < 1:
        raise ValueError("bins_per_decade must be >= 1")
    bpd = bins_per_decade
    underflow = 0
    overflow = 0
    indexed: list[int] = []
    total = 0
    for v in values:
        total += 1
        if v <= 0:
            underflow += 1
            continue
        if max_value is not None and v > max_value:
            overflow += 1
            continue
        idx = math.floor(bpd * math.log10(v))
        # guard float slop at bin boundaries
        if 10.0 ** ((idx + 1) / bpd) <= v:
            idx += 1
        elif 10.0 ** (idx / bpd) > v:
            idx -= 1
        indexed.append(idx)
    if underflow:
        logger.warning("%d nonpositive value(s) counted as underflow", underflow)
    if not indexed:
        return LogHistogram(bpd, [], [], underflow, overflow)
    lo, hi = min(indexed), max(indexed)
    counts = [0] * (hi - lo + 1)
    for idx in indexed:
        counts[idx - lo] += 1
    edges = [10.0 ** (i / bpd) for i in range(lo, hi + 2)]
    assert sum(counts) + underflow + overflow == total
    return LogHistogram(bpd, edges, counts, underflow, overflow)


def _render(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path, meta: dict, columns: list[str], rows: Iterable[tuple]) -> None:
    """CSV with a '# key = value' metadata header; byte-stable for fixed input."""
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for key in sorted(meta):
                fh.write(f"# {key} = {_render(meta[key])}\n")
            fh.write(",".join(columns) + "\n")
            for row in rows:
                fh.write(",".join(_render(v) for v in row) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def read_csv(path) -> tuple[dict, list[str], list[list[str]]]:
    meta: dict = {}
    columns: list[str] = []
    rows: list[list[str]] = []
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.rstrip("\n")
                if not line:
                    continue
                if line.startswith("#"):
                    key, _, value = line[1:].partition("=")
                    meta[key.strip()] = value.strip()
                elif not columns:
                    columns = line.split(",")
                else:
                    rows.append(line.split(","))
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc}") from exc
    return meta, columns, rows


OUTCOME_COLUMNS = ["run", "seed", "tau", "failure_kind", "failing_edge"]


def write_outcomes_csv(outcomes: list[RunOutcome], path, meta: dict) -> None:
    rows = ((i, o.seed_used, o.tau, o.failure_kind, o.failing_edge)
            for i, o in enumerate(outcomes))
    write_csv(path, meta, OUTCOME_COLUMNS, rows)


def read_outcomes_csv(path) -> tuple[list[RunOutcome], dict]:
    meta, columns, rows = read_csv(path)
    if columns != OUTCOME_COLUMNS:
        raise ValueError(f"{path}: unexpected columns {columns}")
    outcomes = []
    for row in rows:
        outcomes.append(RunOutcome(
            tau=int(row[2]),
            failing_edge=int(row[4]) if row[4] != "" else None,
            failure_kind=row[3],
            seed_used=int(row[1]),
        ))
    return outcomes, meta


AGGREGATE_COLUMNS = ["config_id", "count", "min", "max", "mean", "std", "censored"]


def write_aggregates_csv(aggregates: list[Aggregate], path, meta: dict) -> None:
    rows = ((a.config_id, a.count, a.min, a.max, a.mean, a.std, a.censored_count)
            for a in aggregates)
    write_csv(path, meta, AGGREGATE_COLUMNS, rows)


SWEEP_COLUMNS = ["capacity", "min", "mean", "max", "std", "censored"]


def write_sweep_csv(points, path, meta: dict, horizon: Optional[int] = None) -> None:
    """One row per swept capacity point; optional within-horizon column."""
    columns = list(SWEEP_COLUMNS)
    if horizon is not None:
        columns.append(f"p_fail_within_{horizon}")
    rows = []
    for point in points:
        censored = sum(1 for o in point.outcomes if o.censored)
        if censored == len(point.outcomes):
            # right-censored everywhere: no moments, but the point is reported
            row = [point.balance, None, None, None, None, censored]
        else:
            agg = aggregate(point.outcomes, config_id=str(point.balance))
            row = [point.balance, agg.min, agg.mean, agg.max, agg.std, censored]
        if horizon is not None:
            row.append(point.p_fail_within_horizon)
        rows.append(tuple(row))
    write_csv(path, meta, columns, rows)


HISTOGRAM_COLUMNS = ["bin_lo", "bin_hi", "count"]


def write_histogram_csv(hist: LogHistogram, path, meta: dict) -> None:
    full_meta = dict(meta)
    full_meta["bins_per_decade"] = hist.bins_per_decade
    full_meta["underflow"] = hist.underflow
    full_meta["overflow"] = hist.overflow
    rows = ((hist.edges[i], hist.edges[i + 1], hist.counts[i])
            for i in range(len(hist.counts)))
    write_csv(path, full_meta, HISTOGRAM_COLUMNS, rows)


def write_jsonl(path, meta: dict, columns: list[str], rows: Iterable[tuple]) -> None:
    """Line-delimited JSON: one meta object, then one object per record."""
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(json.dumps({"meta": meta}, sort_keys=True) + "\n")
            for row in rows:
                fh.write(json.dumps(dict(zip(columns, row)), sort_keys=True) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def emit_campaign(payload, path, meta: dict, fmt: str = "csv") -> None:
    """Write outcomes, aggregates, or a histogram as CSV or line-delimited JSON.

    Byte-stable for fixed inputs in both formats.
    """
    if fmt not in ("csv", "jsonl"):
        raise ValueError(f"format must be 'csv' or 'jsonl', got {fmt!r}")
    if isinstance(payload, LogHistogram):
        if fmt == "csv":
            write_histogram_csv(payload, path, meta)
            return
        full_meta = dict(meta, bins_per_decade=payload.bins_per_decade,
                         underflow=payload.underflow, overflow=payload.overflow)
        rows = ((payload.edges[i], payload.edges[i + 1], payload.counts[i])
                for i in range(len(payload.counts)))
        write_jsonl(path, full_meta, HISTOGRAM_COLUMNS, rows)
        return
    items = list(payload)
    if not items:
        raise ValueError("nothing to emit")
    if isinstance(items[0], RunOutcome):
        columns = OUTCOME_COLUMNS
        rows = [(i, o.seed_used, o.tau, o.failure_kind, o.failing_edge)
                for i, o in enumerate(items)]
    elif isinstance(items[0], Aggregate):
        columns = AGGREGATE_COLUMNS
        rows = [(a.config_id, a.count, a.min, a.max, a.mean, a.std, a.censored_count)
                for a in items]
    else:
        raise TypeError(f"cannot emit {type(items[0]).__name__} records")
    writer = write_csv if fmt == "csv" else write_jsonl
    writer(path, meta, columns, rows)
