"""Report payloads: run manifests, tabular emitters, and atomic output.

Every run directory embeds a manifest tying results to (tool version,
config hash, dataset hashes, seed); identical inputs reproduce identical
payload bytes, timestamp aside. Floats are written in shortest round-trip
form so no precision is lost between a report and the library call that
produced it.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import platform
import shutil
import tempfile
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Mapping, Sequence

from .harness import ComparisonRecord, SensitivityCurve, VoteCountRow
from .metrics import MetricResult, ResidualSet


def format_number(value: float | int | None) -> str:
    if value is None:
        return ""
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sha256_file(path: str | Path) -> str:
    return sha256_bytes(Path(path).read_bytes())


@dataclass(frozen=True)
class RunManifest:
    tool_version: str
    config_sha256: str
    dataset_sha256: Mapping[str, str]
    seed: int
    timestamp: str
    environment: str

    def to_json(self) -> str:
        doc = {
            "tool_version": self.tool_version,
            "config_sha256": self.config_sha256,
            "dataset_sha256": dict(sorted(self.dataset_sha256.items())),
            "seed": self.seed,
            "timestamp": self.timestamp,
            "environment": self.environment,
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def build_manifest(
    tool_version: str,
    config_bytes: bytes,
    dataset_files: Mapping[str, Sequence[str | Path]],
    seed: int,
) -> RunManifest:
    hashes = {}
    for label, paths in dataset_files.items():
        digest = hashlib.sha256()
        for p in paths:
            digest.update(Path(p).read_bytes())
        hashes[label] = digest.hexdigest()
    return RunManifest(
        tool_version=tool_version,
        config_sha256=sha256_bytes(config_bytes),
        dataset_sha256=hashes,
        seed=seed,
        timestamp=datetime.now(timezone.utc).isoformat(timespec="seconds"),
        environment=f"python {platform.python_version()} on {platform.system().lower()}",
    )


# -- tables -----------------------------------------------------------------


@dataclass(frozen=True)
class Table:
    """A header plus rows of already-stringified cells."""

    header: tuple[str, ...]
    rows: tuple[tuple[str, ...], ...]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.header)
        writer.writerows(self.rows)
        return buf.getvalue()

    def to_json_lines(self) -> str:
        lines = [
            json.dumps(dict(zip(self.header, row)), sort_keys=True)
            for row in self.rows
        ]
        return "\n".join(lines) + ("\n" if lines else "")

    def render(self, fmt: str) -> tuple[str, str]:
        """(extension, payload) for the chosen format."""
        if fmt == "csv":
            return "csv", self.to_csv()
        if fmt == "json-lines":
            return "jsonl", self.to_json_lines()
        raise ValueError(f"unknown output format {fmt!r}")


RESIDUALS_HEADER = (
    "dataset", "predictor", "case_id", "actual", "predicted",
    "absolute_residual", "mre", "fallback",
)


def residuals_table(residuals: ResidualSet, fallback_ids: Sequence[str] = ()) -> Table:
    flagged = set(fallback_ids)
    rows = tuple(
        (
            residuals.dataset_label,
            residuals.predictor_label,
            e.case_id,
            format_number(e.actual),
            format_number(e.predicted),
            format_number(e.absolute_residual),
            format_number(e.mre),
            "1" if e.case_id in flagged else "0",
        )
        for e in residuals.entries
    )
    return Table(header=RESIDUALS_HEADER, rows=rows)


def metrics_table(results: Sequence[tuple[str, str, MetricResult]]) -> Table:
    """Rows of (dataset label, predictor label, metric result)."""
    rows = tuple(
        (
            dataset,
            predictor,
            r.name,
            format_number(r.value),
            format_number(r.ci_low),
            format_number(r.ci_high),
            format_number(r.confidence_level),
            str(r.n),
            str(r.bootstrap_b),
            str(r.seed),
        )
        for dataset, predictor, r in results
    )
    return Table(
        header=(
            "dataset", "predictor", "metric", "value", "ci_low", "ci_high",
            "confidence_level", "n", "bootstrap_b", "seed",
        ),
        rows=rows,
    )


def comparison_table(records: Sequence[ComparisonRecord]) -> Table:
    rows = tuple(
        (
            r.dataset_label,
            r.predictor_a,
            r.predictor_b,
            r.metric,
            format_number(r.value_a),
            format_number(r.value_b),
            r.verdict or "",
            format_number(r.effect_size),
        )
        for r in records
    )
    return Table(
        header=(
            "dataset_label", "predictor_a", "predictor_b", "metric",
            "value_a", "value_b", "verdict", "effect_size",
        ),
        rows=rows,
    )


def vote_count_table(rows: Sequence[VoteCountRow]) -> Table:
    return Table(
        header=("predictor_a", "predictor_b", "results_plus", "results_minus", "results_equal"),
        rows=tuple(
            (r.predictor_a, r.predictor_b, str(r.a_better), str(r.b_better), str(r.inconclusive))
            for r in rows
        ),
    )


def sensitivity_table(curve: SensitivityCurve, dataset: str = "", predictor: str = "") -> Table:
    rows = []
    for point in curve.points:
        for metric, value in point.values.items():
            rows.append(
                (
                    dataset,
                    predictor,
                    str(point.size),
                    str(point.repeat),
                    metric,
                    format_number(value),
                    "1" if point.flagged else "0",
                    str(point.n_test),
                )
            )
    return Table(
        header=("dataset", "predictor", "size", "repeat", "metric", "value", "flagged", "n_test"),
        rows=tuple(rows),
    )


def sensitivity_spread_table(curve: SensitivityCurve, dataset: str = "", predictor: str = "") -> Table:
    return Table(
        header=("dataset", "predictor", "size", "metric", "min", "median", "max"),
        rows=tuple(
            (
                dataset,
                predictor,
                str(s.size),
                s.metric,
                format_number(s.minimum),
                format_number(s.median),
                format_number(s.maximum),
            )
            for s in curve.spreads
        ),
    )


def load_comparison_records(path: str | Path) -> list[ComparisonRecord]:
    """Read comparison records from CSV (verdict and effect size optional)."""
    with Path(path).open("r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"dataset_label", "predictor_a", "predictor_b", "metric", "value_a", "value_b"}
        missing = required - set(reader.fieldnames or [])
        if missing:
            raise ValueError(f"{path}: record file lacks columns {sorted(missing)}")
        records = []
        for row in reader:
            effect = row.get("effect_size") or None
            records.append(
                ComparisonRecord(
                    dataset_label=row["dataset_label"],
                    predictor_a=row["predictor_a"],
                    predictor_b=row["predictor_b"],
                    metric=row["metric"],
                    value_a=float(row["value_a"]),
                    value_b=float(row["value_b"]),
                    verdict=row.get("verdict") or None,
                    effect_size=float(effect) if effect is not None else None,
                )
            )
    if not records:
        raise ValueError(f"{path}: no comparison records")
    return records


# -- summaries and atomic output ----------------------------------------------


def spread_summary(residuals: ResidualSet) -> dict[str, float]:
    """Min/median/max absolute residual: the variability block every
    summary must carry alongside its point metrics."""
    values = sorted(e.absolute_residual for e in residuals.entries)
    mid = len(values) // 2
    median = values[mid] if len(values) % 2 == 1 else (values[mid - 1] + values[mid]) / 2.0
    return {"min": values[0], "median": median, "max": values[-1]}


def summary_lines(
    residuals: ResidualSet,
    metric_results: Sequence[MetricResult],
    fallback_count: int,
    notes: Sequence[str] = (),
) -> list[str]:
    spread = spread_summary(residuals)
    lines = [
        f"dataset: {residuals.dataset_label}",
        f"predictor: {residuals.predictor_label}",
        f"cases: {len(residuals)}",
        f"fold fallbacks: {fallback_count}",
        "",
        "absolute residual spread (effort units):",
        f"  min {format_number(spread['min'])}"
        f"  median {format_number(spread['median'])}"
        f"  max {format_number(spread['max'])}",
        "",
        "metrics (point value [ci_low, ci_high]):",
    ]
    for r in metric_results:
        lines.append(
            f"  {r.name}: {format_number(r.value)} "
            f"[{format_number(r.ci_low)}, {format_number(r.ci_high)}] "
            f"@ {format_number(r.confidence_level)} (b={r.bootstrap_b}, seed={r.seed})"
        )
    for note in notes:
        lines.append(f"note: {note}")
    return lines


def write_outputs_atomically(out_dir: str | Path, files: Mapping[str, str]) -> list[Path]:
    """Write all payloads or none: stage in a temp dir, then move into place."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    staging = Path(tempfile.mkdtemp(prefix=".staging-", dir=out_dir))
    written: list[Path] = []
    try:
        for name, payload in files.items():
            staged = staging / name
            staged.parent.mkdir(parents=True, exist_ok=True)
            staged.write_text(payload, encoding="utf-8", newline="")
        for name in files:
            target = out_dir / name
            target.parent.mkdir(parents=True, exist_ok=True)
            os.replace(staging / name, target)
            written.append(target)
    finally:
        shutil.rmtree(staging, ignore_errors=True)
    return written
