"""Typed project datasets: CSV case data plus a sidecar feature schema.

Feature roles enforce the no-peeking rule at the data layer: anything a
predictor is allowed to see flows through :meth:`Dataset.predictor_values`
and :func:`active_predictors`, which never expose features whose role is
``excluded-peeking`` or ``inactive``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

FEATURE_KINDS = ("numeric", "categorical", "boolean")
FEATURE_ROLES = ("predictor", "target", "case-id", "excluded-peeking", "inactive")

#: Cell contents treated as a missing value.
MISSING_TOKENS = ("", "?")

_SCHEMA_FEATURE_KEYS = {"name", "kind", "role", "units", "size_driver"}
_SCHEMA_TOP_KEYS = {"features", "provenance"}


class DatasetError(ValueError):
    """Raised when a dataset or schema violates its invariants."""


@dataclass(frozen=True)
class FeatureDef:
    """One feature of the case schema."""

    name: str
    kind: str
    role: str
    units: str = ""
    size_driver: bool = False

    def __post_init__(self) -> None:
        if self.kind not in FEATURE_KINDS:
            raise DatasetError(f"feature {self.name!r}: unknown kind {self.kind!r}")
        if self.role not in FEATURE_ROLES:
            raise DatasetError(f"feature {self.name!r}: unknown role {self.role!r}")
        if self.size_driver and not (self.kind == "numeric" and self.role == "predictor"):
            raise DatasetError(
                f"feature {self.name!r}: size_driver requires a numeric predictor"
            )


@dataclass(frozen=True)
class ProjectCase:
    """A completed project: feature values plus its known effort."""

    id: str
    values: Mapping[str, float | str | None]
    effort: float

    def __post_init__(self) -> None:
        if not (self.effort > 0 and math.isfinite(self.effort)):
            raise DatasetError(f"case {self.id!r}: effort must be finite and > 0")


@dataclass(frozen=True)
class Dataset:
    """Immutable collection of cases conforming to a feature schema."""

    schema: tuple[FeatureDef, ...]
    cases: tuple[ProjectCase, ...]
    provenance: str = ""
    label: str = "dataset"
    _by_id: dict[str, ProjectCase] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        validate_schema(self.schema)
        if not self.cases:
            raise DatasetError("dataset must contain at least one case")
        by_id: dict[str, ProjectCase] = {}
        for case in self.cases:
            if case.id in by_id:
                raise DatasetError(f"duplicate case id {case.id!r}")
            by_id[case.id] = case
            self._check_case(case)
        object.__setattr__(self, "_by_id", by_id)

    def _check_case(self, case: ProjectCase) -> None:
        for feat in self.schema:
            if feat.role in ("target", "case-id"):
                continue
            if feat.name not in case.values:
                raise DatasetError(f"case {case.id!r}: missing entry for {feat.name!r}")
            value = case.values[feat.name]
            if value is None:
                continue
            if feat.kind in ("numeric", "boolean"):
                if not isinstance(value, float) or not math.isfinite(value):
                    raise DatasetError(
                        f"case {case.id!r}: {feat.name!r} must be a finite number"
                    )
                if feat.kind == "boolean" and value not in (0.0, 1.0):
                    raise DatasetError(
                        f"case {case.id!r}: boolean {feat.name!r} must be 0 or 1"
                    )
            elif not isinstance(value, str):
                raise DatasetError(f"case {case.id!r}: {feat.name!r} must be text")

    @property
    def n(self) -> int:
        return len(self.cases)

    @property
    def target(self) -> FeatureDef:
        return next(f for f in self.schema if f.role == "target")

    def case(self, case_id: str) -> ProjectCase:
        try:
            return self._by_id[case_id]
        except KeyError:
            raise DatasetError(f"unknown case id {case_id!r}") from None

    def case_ids(self) -> tuple[str, ...]:
        return tuple(c.id for c in self.cases)

    def active_predictors(self) -> tuple[FeatureDef, ...]:
        """Features usable for prediction, in stable schema order."""
        return active_predictors(self)

    def predictor_values(self, case: ProjectCase | str) -> dict[str, float | str | None]:
        """The predictor-facing view of one case.

        Only features with role ``predictor`` appear; excluded-peeking and
        inactive features are structurally invisible here.
        """
        if isinstance(case, str):
            case = self.case(case)
        return {f.name: case.values[f.name] for f in self.active_predictors()}

    def feature_range(
        self, feature: str, case_subset: Iterable[ProjectCase | str] | None = None
    ) -> tuple[float, float]:
        return feature_range(self, feature, case_subset)

    def size_driver(self) -> FeatureDef | None:
        """First size-driver predictor in schema order, if any."""
        for feat in self.schema:
            if feat.size_driver:
                return feat
        return None

    def subset(self, case_ids: Sequence[str]) -> "Dataset":
        """New dataset restricted to the given case ids, preserving order."""
        cases = tuple(self.case(cid) for cid in case_ids)
        return Dataset(self.schema, cases, provenance=self.provenance, label=self.label)


def validate_schema(schema: Sequence[FeatureDef]) -> None:
    names = [f.name for f in schema]
    if len(set(names)) != len(names):
        raise DatasetError("schema feature names must be unique")
    targets = [f for f in schema if f.role == "target"]
    if len(targets) != 1:
        raise DatasetError("schema must define exactly one target feature")
    if targets[0].kind != "numeric":
        raise DatasetError("target feature must be numeric")
    if sum(1 for f in schema if f.role == "case-id") > 1:
        raise DatasetError("schema may define at most one case-id feature")


def active_predictors(dataset: Dataset) -> tuple[FeatureDef, ...]:
    """Features with role ``predictor`` only, in stable schema order."""
    return tuple(f for f in dataset.schema if f.role == "predictor")


def feature_range(
    dataset: Dataset,
    feature: str,
    case_subset: Iterable[ProjectCase | str] | None = None,
) -> tuple[float, float]:
    """Min and max of a numeric feature over the non-missing values of a subset.

    The subset defaults to all cases. Ranges are always computed from the
    cases handed in, so callers holding a training split never leak held-out
    values into normalization.
    """
    feat = next((f for f in dataset.schema if f.name == feature), None)
    if feat is None:
        raise DatasetError(f"unknown feature {feature!r}")
    if feat.kind == "categorical":
        raise DatasetError(f"feature {feature!r} is categorical, it has no range")
    cases = dataset.cases if case_subset is None else [
        dataset.case(c) if isinstance(c, str) else c for c in case_subset
    ]
    if not cases:
        raise DatasetError("case subset must be non-empty")
    values = [
        c.values[feature]
        for c in cases
        if c.values.get(feature) is not None
    ]
    if not values:
        raise DatasetError(f"feature {feature!r} has no non-missing value in subset")
    nums = [float(v) for v in values]  # type: ignore[arg-type]
    return (min(nums), max(nums))


# -- schema sidecar ------------------------------------------------------


def load_schema(path: str | Path) -> tuple[tuple[FeatureDef, ...], str]:
    """Parse a sidecar schema file (JSON). Unknown keys are rejected."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise DatasetError(f"schema {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DatasetError(f"schema {path}: invalid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise DatasetError(f"schema {path}: top level must be an object")
    unknown = set(doc) - _SCHEMA_TOP_KEYS
    if unknown:
        raise DatasetError(f"schema {path}: unknown keys {sorted(unknown)}")
    raw_features = doc.get("features")
    if not isinstance(raw_features, list) or not raw_features:
        raise DatasetError(f"schema {path}: 'features' must be a non-empty list")
    features = []
    for entry in raw_features:
        if not isinstance(entry, dict):
            raise DatasetError(f"schema {path}: each feature must be an object")
        unknown = set(entry) - _SCHEMA_FEATURE_KEYS
        if unknown:
            raise DatasetError(
                f"schema {path}: feature {entry.get('name', '?')!r} has "
                f"unknown keys {sorted(unknown)}"
            )
        try:
            features.append(
                FeatureDef(
                    name=str(entry["name"]),
                    kind=str(entry["kind"]),
                    role=str(entry["role"]),
                    units=str(entry.get("units", "")),
                    size_driver=bool(entry.get("size_driver", False)),
                )
            )
        except KeyError as exc:
            raise DatasetError(f"schema {path}: feature missing key {exc}") from None
    schema = tuple(features)
    validate_schema(schema)
    return schema, str(doc.get("provenance", ""))


def write_schema(schema: Sequence[FeatureDef], path: str | Path, provenance: str = "") -> None:
    doc = {
        "features": [
            {
                "name": f.name,
                "kind": f.kind,
                "role": f.role,
                "units": f.units,
                "size_driver": f.size_driver,
            }
            for f in schema
        ],
        "provenance": provenance,
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


# -- CSV load / write ----------------------------------------------------


def load_dataset(csv_path: str | Path, schema_path: str | Path, label: str | None = None) -> Dataset:
    """Load a dataset from a CSV file and its sidecar schema.

    Header names must match schema feature names exactly (order-free).
    Empty cells and ``?`` are missing values; the target may never be
    missing, zero, or negative.
    """
    schema, provenance = load_schema(schema_path)
    csv_path = Path(csv_path)
    try:
        with csv_path.open("r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise DatasetError(f"{csv_path}: empty file, header row is mandatory") from None
            rows = list(reader)
    except OSError as exc:
        raise DatasetError(f"{csv_path}: {exc}") from exc
    return _build_dataset(
        schema, provenance, header, rows,
        source=str(csv_path), label=label or csv_path.stem,
    )


def _build_dataset(
    schema: tuple[FeatureDef, ...],
    provenance: str,
    header: list[str],
    rows: list[list[str]],
    source: str,
    label: str,
) -> Dataset:
    by_name = {f.name: f for f in schema}
    unknown = [h for h in header if h not in by_name]
    if unknown:
        raise DatasetError(f"{source}: unknown columns {unknown}")
    missing_cols = [f.name for f in schema if f.name not in header]
    if missing_cols:
        raise DatasetError(f"{source}: columns missing for features {missing_cols}")
    if len(set(header)) != len(header):
        raise DatasetError(f"{source}: duplicate header columns")

    target = next(f for f in schema if f.role == "target")
    id_feature = next((f for f in schema if f.role == "case-id"), None)

    cases: list[ProjectCase] = []
    for row_no, row in enumerate(rows, start=1):
        if len(row) != len(header):
            raise DatasetError(f"{source}: row {row_no} has {len(row)} cells, expected {len(header)}")
        cells = dict(zip(header, row))
        values: dict[str, float | str | None] = {}
        effort: float | None = None
        case_id = str(row_no)
        for feat in schema:
            raw = cells[feat.name].strip()
            if feat.role == "case-id":
                if raw in MISSING_TOKENS:
                    raise DatasetError(f"{source}: row {row_no} has a missing case id")
                case_id = raw
                continue
            if raw in MISSING_TOKENS:
                if feat.role == "target":
                    raise DatasetError(
                        f"{source}: row {row_no}: target {feat.name!r} may never be missing"
                    )
                values[feat.name] = None
                continue
            if feat.kind in ("numeric", "boolean"):
                parsed = _parse_number(raw, source, row_no, feat.name)
                if feat.kind == "boolean" and parsed not in (0.0, 1.0):
                    raise DatasetError(
                        f"{source}: row {row_no}: boolean {feat.name!r} must be 0 or 1, got {raw!r}"
                    )
                if feat.role == "target":
                    if parsed <= 0:
                        raise DatasetError(
                            f"{source}: row {row_no}: target {feat.name!r} must be > 0, got {raw!r}"
                        )
                    effort = parsed
                else:
                    values[feat.name] = parsed
            else:
                values[feat.name] = raw
        assert effort is not None  # target presence enforced above
        if id_feature is None:
            case_id = str(row_no)
        cases.append(ProjectCase(id=case_id, values=values, effort=effort))

    try:
        return Dataset(schema, tuple(cases), provenance=provenance, label=label)
    except DatasetError as exc:
        raise DatasetError(f"{source}: {exc}") from None


def _parse_number(raw: str, source: str, row_no: int, name: str) -> float:
    # Locale-independent: dot decimal separator only.
    try:
        value = float(raw)
    except ValueError:
        raise DatasetError(
            f"{source}: row {row_no}: non-numeric value {raw!r} in numeric column {name!r}"
        ) from None
    if not math.isfinite(value):
        raise DatasetError(
            f"{source}: row {row_no}: non-finite value {raw!r} in column {name!r}"
        )
    return value


def validate_files(csv_path: str | Path, schema_path: str | Path) -> list[str]:
    """Run every dataset invariant, collecting diagnostics instead of raising.

    Returns an empty list when the pair is clean. Schema problems are fatal
    (row checks need a schema), but row-level issues are reported together.
    """
    try:
        schema, provenance = load_schema(schema_path)
    except DatasetError as exc:
        return [str(exc)]
    csv_path = Path(csv_path)
    try:
        with csv_path.open("r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                return [f"{csv_path}: empty file, header row is mandatory"]
            rows = list(reader)
    except OSError as exc:
        return [f"{csv_path}: {exc}"]

    issues: list[str] = []
    by_name = {f.name: f for f in schema}
    unknown = [h for h in header if h not in by_name]
    if unknown:
        issues.append(f"{csv_path}: unknown columns {unknown}")
    missing_cols = [f.name for f in schema if f.name not in header]
    if missing_cols:
        issues.append(f"{csv_path}: columns missing for features {missing_cols}")
    if issues:
        return issues

    seen_ids: dict[str, int] = {}
    for row_no, row in enumerate(rows, start=1):
        try:
            ds = _build_dataset(schema, provenance, header, [row], str(csv_path), "check")
        except DatasetError as exc:
            issues.append(str(exc).replace("row 1", f"row {row_no}"))
            continue
        cid = ds.cases[0].id if any(f.role == "case-id" for f in schema) else str(row_no)
        if cid in seen_ids:
            issues.append(
                f"{csv_path}: row {row_no}: duplicate case id {cid!r} "
                f"(first seen at row {seen_ids[cid]})"
            )
        else:
            seen_ids[cid] = row_no
    if not rows:
        issues.append(f"{csv_path}: dataset must contain at least one case")
    return issues


def format_value(value: float | str | None) -> str:
    """Canonical text form of a cell: integers without a decimal point,

    other floats in shortest round-trip form, missing as the empty cell.
    """
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def dataset_to_csv(dataset: Dataset) -> str:
    """Serialize in canonical form: schema column order, RFC-4180 quoting."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    header = [f.name for f in dataset.schema]
    writer.writerow(header)
    id_feature = next((f for f in dataset.schema if f.role == "case-id"), None)
    target = dataset.target
    for case in dataset.cases:
        row = []
        for feat in dataset.schema:
            if id_feature is not None and feat.name == id_feature.name:
                row.append(case.id)
            elif feat.name == target.name:
                row.append(format_value(case.effort))
            else:
                row.append(format_value(case.values[feat.name]))
        writer.writerow(row)
    return buf.getvalue()


def write_dataset(dataset: Dataset, csv_path: str | Path) -> None:
    Path(csv_path).write_text(dataset_to_csv(dataset), encoding="utf-8", newline="")
