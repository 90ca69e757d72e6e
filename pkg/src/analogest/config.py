"""Experiment configuration files: versioned JSON, strictly validated.

Every experiment is driven by a config document plus a mandatory seed;
unknown keys are rejected everywhere so a typo cannot silently change what
an experiment means. Dataset paths are resolved relative to the config
file, and bundled datasets can be referenced by name.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from .bundled import bundled_path
from .dataset import Dataset, load_dataset
from .estimators import (
    AnalogyEstimator,
    EffortEstimatorMixin,
    MeanBaselineEstimator,
    StepwiseRegressionEstimator,
)
from .harness import MetricSpec, SubsetSearchSpec

CONFIG_VERSION = 1


class ConfigError(ValueError):
    """Raised when a config document is malformed."""


def _check_keys(doc: Mapping, allowed: set[str], where: str) -> None:
    unknown = set(doc) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")


@dataclass(frozen=True)
class DatasetRef:
    label: str
    csv_path: Path
    schema_path: Path

    def load(self) -> Dataset:
        return load_dataset(self.csv_path, self.schema_path, label=self.label)

    @property
    def files(self) -> tuple[Path, Path]:
        return (self.csv_path, self.schema_path)


@dataclass(frozen=True)
class PredictorSpec:
    name: str
    kind: str
    options: Mapping[str, object] = field(default_factory=dict)

    def build(self) -> EffortEstimatorMixin:
        if self.kind == "analogy":
            opts = dict(self.options)
            subset = opts.pop("feature_subset", None)
            return AnalogyEstimator(
                k=int(opts.pop("k", 3)),
                pooling=str(opts.pop("pooling", "mean")),
                adaptation=str(opts.pop("adaptation", "none")),
                feature_subset=tuple(subset) if subset else None,
                feature_weights=dict(opts.pop("feature_weights", {}) or {}),
            )
        if self.kind == "stepwise":
            opts = dict(self.options)
            return StepwiseRegressionEstimator(
                alpha_enter=float(opts.pop("alpha_enter", 0.05)),
                alpha_remove=float(opts.pop("alpha_remove", 0.10)),
                transform=str(opts.pop("transform", "none")),
            )
        if self.kind == "mean-baseline":
            return MeanBaselineEstimator()
        raise ConfigError(f"unknown predictor type {self.kind!r}")


@dataclass(frozen=True)
class BootstrapConfig:
    b: int = 1000
    level: float = 0.95


@dataclass(frozen=True)
class SensitivityConfig:
    sizes: tuple[int, ...]
    repeats: int = 3
    order_feature: str | None = None


@dataclass(frozen=True)
class ServeConfig:
    host: str = "127.0.0.1"
    port: int = 8023
    cors_origins: tuple[str, ...] = ("*",)


@dataclass(frozen=True)
class ExperimentConfig:
    path: Path
    raw_bytes: bytes
    seed: int | None
    datasets: tuple[DatasetRef, ...]
    predictors: tuple[PredictorSpec, ...]
    metrics: tuple[MetricSpec, ...]
    bootstrap: BootstrapConfig
    subset_search: SubsetSearchSpec | None
    sensitivity: SensitivityConfig | None
    comparison_epsilon: float
    comparison_records: tuple[Path, ...]
    serve: ServeConfig

    def dataset_files(self) -> dict[str, tuple[Path, Path]]:
        return {ref.label: ref.files for ref in self.datasets}


_ALLOWED_TOP = {
    "version", "seed", "datasets", "predictors", "metrics", "bootstrap",
    "subset_search", "sensitivity", "comparison", "serve",
}

_PREDICTOR_OPTION_KEYS = {
    "analogy": {"k", "pooling", "adaptation", "feature_subset", "feature_weights"},
    "stepwise": {"alpha_enter", "alpha_remove", "transform"},
    "mean-baseline": set(),
}


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = path.read_bytes()
        doc = json.loads(raw.decode("utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be an object")
    _check_keys(doc, _ALLOWED_TOP, str(path))
    if doc.get("version") != CONFIG_VERSION:
        raise ConfigError(
            f"{path}: unsupported config version {doc.get('version')!r}, expected {CONFIG_VERSION}"
        )

    base = path.parent
    datasets = _parse_datasets(doc.get("datasets"), base, str(path))
    predictors = _parse_predictors(doc.get("predictors", []), str(path))
    metrics = _parse_metrics(doc.get("metrics", []), str(path))
    bootstrap = _parse_bootstrap(doc.get("bootstrap", {}), str(path))
    subset = _parse_subset_search(doc.get("subset_search"), metrics, str(path))
    sensitivity = _parse_sensitivity(doc.get("sensitivity"), str(path))
    epsilon, record_paths = _parse_comparison(doc.get("comparison", {}), base, str(path))
    serve = _parse_serve(doc.get("serve", {}), str(path))

    seed = doc.get("seed")
    if seed is not None and not isinstance(seed, int):
        raise ConfigError(f"{path}: seed must be an integer")

    return ExperimentConfig(
        path=path,
        raw_bytes=raw,
        seed=seed,
        datasets=datasets,
        predictors=predictors,
        metrics=metrics,
        bootstrap=bootstrap,
        subset_search=subset,
        sensitivity=sensitivity,
        comparison_epsilon=epsilon,
        comparison_records=record_paths,
        serve=serve,
    )


def _parse_datasets(raw: object, base: Path, where: str) -> tuple[DatasetRef, ...]:
    if not isinstance(raw, list) or not raw:
        raise ConfigError(f"{where}: 'datasets' must be a non-empty list")
    refs = []
    labels = set()
    for entry in raw:
        if not isinstance(entry, dict):
            raise ConfigError(f"{where}: each dataset entry must be an object")
        _check_keys(entry, {"label", "csv", "schema", "bundled"}, f"{where} datasets")
        if "bundled" in entry:
            stem = str(entry["bundled"])
            label = str(entry.get("label", stem))
            csv_path = bundled_path(f"{stem}.csv")
            schema_path = bundled_path(f"{stem}.schema.json")
        else:
            try:
                label = str(entry["label"])
                csv_path = (base / str(entry["csv"])).resolve()
                schema_path = (base / str(entry["schema"])).resolve()
            except KeyError as exc:
                raise ConfigError(f"{where}: dataset entry missing key {exc}") from None
        if label in labels:
            raise ConfigError(f"{where}: duplicate dataset label {label!r}")
        labels.add(label)
        refs.append(DatasetRef(label=label, csv_path=csv_path, schema_path=schema_path))
    return tuple(refs)


def _parse_predictors(raw: object, where: str) -> tuple[PredictorSpec, ...]:
    if not isinstance(raw, list):
        raise ConfigError(f"{where}: 'predictors' must be a list")
    specs = []
    names = set()
    for entry in raw:
        if not isinstance(entry, dict) or "type" not in entry:
            raise ConfigError(f"{where}: each predictor needs a 'type'")
        kind = str(entry["type"])
        if kind not in _PREDICTOR_OPTION_KEYS:
            raise ConfigError(f"{where}: unknown predictor type {kind!r}")
        _check_keys(
            entry,
            {"type", "name"} | _PREDICTOR_OPTION_KEYS[kind],
            f"{where} predictor {entry.get('name', kind)}",
        )
        name = str(entry.get("name", kind))
        if name in names:
            raise ConfigError(f"{where}: duplicate predictor name {name!r}")
        names.add(name)
        options = {k: v for k, v in entry.items() if k not in ("type", "name")}
        spec = PredictorSpec(name=name, kind=kind, options=options)
        spec.build()  # fail fast on bad options
        specs.append(spec)
    return tuple(specs)


def _parse_metrics(raw: object, where: str) -> tuple[MetricSpec, ...]:
    if not isinstance(raw, list):
        raise ConfigError(f"{where}: 'metrics' must be a list")
    if not raw:
        return (MetricSpec("mmre"), MetricSpec("mdmre"), MetricSpec("pred"), MetricSpec("mar"), MetricSpec("sa"))
    specs = []
    for entry in raw:
        if isinstance(entry, str):
            entry = {"name": entry}
        if not isinstance(entry, dict) or "name" not in entry:
            raise ConfigError(f"{where}: each metric needs a 'name'")
        _check_keys(entry, {"name", "threshold"}, f"{where} metrics")
        threshold = entry.get("threshold")
        specs.append(
            MetricSpec(
                name=str(entry["name"]),
                threshold=float(threshold) if threshold is not None else None,
            )
        )
    return tuple(specs)


def _parse_bootstrap(raw: object, where: str) -> BootstrapConfig:
    if not isinstance(raw, dict):
        raise ConfigError(f"{where}: 'bootstrap' must be an object")
    _check_keys(raw, {"b", "level"}, f"{where} bootstrap")
    return BootstrapConfig(
        b=int(raw.get("b", 1000)),
        level=float(raw.get("level", 0.95)),
    )


def _parse_subset_search(
    raw: object, metrics: Sequence[MetricSpec], where: str
) -> SubsetSearchSpec | None:
    if raw is None:
        return None
    if not isinstance(raw, dict):
        raise ConfigError(f"{where}: 'subset_search' must be an object")
    _check_keys(raw, {"mode", "nesting", "objective"}, f"{where} subset_search")
    objective_name = str(raw.get("objective", "mmre"))
    objective = next((m for m in metrics if m.label == objective_name or m.name == objective_name), None)
    if objective is None:
        raise ConfigError(
            f"{where}: subset-search objective {objective_name!r} is not among the configured metrics"
        )
    return SubsetSearchSpec(
        mode=str(raw.get("mode", "exhaustive")),
        nesting=str(raw.get("nesting", "per-fold")),
        objective=objective,
    )


def _parse_sensitivity(raw: object, where: str) -> SensitivityConfig | None:
    if raw is None:
        return None
    if not isinstance(raw, dict) or "sizes" not in raw:
        raise ConfigError(f"{where}: 'sensitivity' needs a 'sizes' list")
    _check_keys(raw, {"sizes", "repeats", "order_feature"}, f"{where} sensitivity")
    sizes = raw["sizes"]
    if isinstance(sizes, dict):
        _check_keys(sizes, {"from", "to"}, f"{where} sensitivity sizes")
        sizes = list(range(int(sizes["from"]), int(sizes["to"]) + 1))
    if not isinstance(sizes, list) or not sizes:
        raise ConfigError(f"{where}: sensitivity sizes must be a non-empty list")
    order = raw.get("order_feature")
    return SensitivityConfig(
        sizes=tuple(int(s) for s in sizes),
        repeats=int(raw.get("repeats", 3)),
        order_feature=str(order) if order is not None else None,
    )


def _parse_comparison(raw: object, base: Path, where: str) -> tuple[float, tuple[Path, ...]]:
    if not isinstance(raw, dict):
        raise ConfigError(f"{where}: 'comparison' must be an object")
    _check_keys(raw, {"epsilon_percent", "records"}, f"{where} comparison")
    records = raw.get("records", [])
    if not isinstance(records, list):
        raise ConfigError(f"{where}: comparison records must be a list of paths")
    paths = []
    for entry in records:
        entry = str(entry)
        if entry.startswith("bundled:"):
            paths.append(bundled_path(entry.split(":", 1)[1]))
        else:
            paths.append((base / entry).resolve())
    return float(raw.get("epsilon_percent", 0.0)), tuple(paths)


def _parse_serve(raw: object, where: str) -> ServeConfig:
    if not isinstance(raw, dict):
        raise ConfigError(f"{where}: 'serve' must be an object")
    _check_keys(raw, {"host", "port", "cors_origins"}, f"{where} serve")
    origins = raw.get("cors_origins", ["*"])
    if not isinstance(origins, list):
        raise ConfigError(f"{where}: cors_origins must be a list")
    return ServeConfig(
        host=str(raw.get("host", "127.0.0.1")),
        port=int(raw.get("port", 8023)),
        cors_origins=tuple(str(o) for o in origins),
    )
