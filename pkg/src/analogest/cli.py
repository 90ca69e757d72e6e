"""Command-line entry point: run experiments from config files and emit
reports that always pair point estimates with their uncertainty and spread.

Exit codes: 0 success, 1 usage or config error, 2 data error, 3 internal
error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path
from typing import Mapping, Sequence

from . import __version__, report
from .analogy import AnalogyError
from .config import ConfigError, ExperimentConfig, load_config
from .dataset import Dataset, DatasetError, validate_files
from .estimators import AnalogyEstimator
from .harness import (
    ComparisonRecord,
    HarnessError,
    LoocvRun,
    run_loocv,
    sensitivity_curve,
    subset_search,
    vote_count,
)
from .metrics import MetricError, MetricResult, ResidualSet, bootstrap_ci, bootstrap_cohens_d, cohens_d
from .report import Table, write_outputs_atomically

OUT_DIR_ENV = "ANALOGEST_OUT"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3


class CliError(Exception):
    def __init__(self, message: str, exit_code: int):
        super().__init__(message)
        self.exit_code = exit_code


def derive_seed(base: int, *parts: object) -> int:
    """Stable sub-seed for a labelled computation (dataset, predictor, metric)."""
    digest = hashlib.sha256(repr((base, parts)).encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "big")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="analogest",
        description="Analogy-based effort estimation and its evaluation harness",
    )
    parser.add_argument("--version", action="version", version=f"analogest {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="experiment config file (JSON)")
    common.add_argument("--out", help=f"output directory (default ${OUT_DIR_ENV} or ./analogest-out)")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--threads", type=int, default=1, help="worker threads, 0 = auto")
    common.add_argument(
        "--format", choices=("csv", "json-lines"), default="csv", help="tabular output format"
    )

    p_validate = sub.add_parser("validate", help="check a dataset and schema pair")
    p_validate.add_argument("csv_path", help="dataset CSV")
    p_validate.add_argument("schema_path", help="sidecar schema JSON")
    p_validate.set_defaults(handler=cmd_validate)

    for name, handler, blurb in (
        ("loocv", cmd_loocv, "leave-one-out evaluation of every configured predictor"),
        ("compare", cmd_compare, "paired leave-one-out comparison of predictors"),
        ("subset-search", cmd_subset_search, "wrapper feature-subset search"),
        ("sensitivity", cmd_sensitivity, "training-set-size sensitivity curves"),
    ):
        p = sub.add_parser(name, parents=[common], help=blurb)
        p.set_defaults(handler=handler)

    p_est = sub.add_parser("estimate", help="one-shot estimate for a target project")
    p_est.add_argument("--config", required=True)
    p_est.add_argument("--dataset", required=True, help="dataset label from the config")
    p_est.add_argument(
        "--value", action="append", default=[], metavar="NAME=VALUE",
        help="target feature value (repeatable); omit or use '?' for missing",
    )
    p_est.add_argument("--k", type=int)
    p_est.add_argument("--pooling")
    p_est.add_argument("--adaptation")
    p_est.add_argument("--subset", help="comma-separated feature subset")
    p_est.set_defaults(handler=cmd_estimate)

    p_serve = sub.add_parser("serve", help="run the estimation HTTP service")
    p_serve.add_argument("--config", required=True)
    p_serve.add_argument("--host")
    p_serve.add_argument("--port", type=int)
    p_serve.set_defaults(handler=cmd_serve)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "handler", None) is None:
        parser.print_help()
        return EXIT_USAGE
    try:
        return args.handler(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DatasetError, MetricError, HarnessError, AnalogyError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except KeyboardInterrupt:
        return EXIT_OK
    except Exception as exc:  # pragma: no cover - last-resort guard
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


# -- shared experiment plumbing -----------------------------------------------


def _load(args) -> tuple[ExperimentConfig, int, Path]:
    config = load_config(args.config)
    seed = args.seed if args.seed is not None else config.seed
    if seed is None:
        raise ConfigError(
            f"{config.path}: no seed configured and --seed not given; "
            "unseeded experiments may not run"
        )
    out_dir = Path(args.out or os.environ.get(OUT_DIR_ENV) or "analogest-out")
    return config, seed, out_dir


def _load_datasets(config: ExperimentConfig) -> dict[str, Dataset]:
    return {ref.label: ref.load() for ref in config.datasets}


def _metric_results(
    residuals: ResidualSet,
    dataset: Dataset,
    config: ExperimentConfig,
    seed: int,
) -> list[MetricResult]:
    results = []
    for spec in config.metrics:
        sub_seed = derive_seed(seed, residuals.dataset_label, residuals.predictor_label, spec.label)
        results.append(
            bootstrap_ci(
                residuals,
                lambda rs, spec=spec: spec.evaluate(rs, dataset),
                b=config.bootstrap.b,
                confidence_level=config.bootstrap.level,
                seed=sub_seed,
                name=spec.label,
            )
        )
    return results


def _run_all_loocv(
    config: ExperimentConfig, datasets: Mapping[str, Dataset], seed: int, threads: int
) -> dict[tuple[str, str], LoocvRun]:
    if not config.predictors:
        raise ConfigError(f"{config.path}: no predictors configured")
    runs: dict[tuple[str, str], LoocvRun] = {}
    for label, dataset in datasets.items():
        for spec in config.predictors:
            estimator = spec.build()
            search = config.subset_search if isinstance(estimator, AnalogyEstimator) else None
            runs[(label, spec.name)] = run_loocv(
                dataset,
                estimator,
                seed=derive_seed(seed, label, spec.name, "loocv"),
                subset_search_spec=search,
                predictor_label=spec.name,
                threads=threads,
            )
    return runs


def _manifest(config: ExperimentConfig, seed: int) -> str:
    manifest = report.build_manifest(
        tool_version=__version__,
        config_bytes=config.raw_bytes,
        dataset_files=config.dataset_files(),
        seed=seed,
    )
    return manifest.to_json()


def _emit(out_dir: Path, fmt: str, tables: Mapping[str, Table], texts: Mapping[str, str]) -> list[Path]:
    files: dict[str, str] = {}
    for stem, table in tables.items():
        ext, payload = table.render(fmt)
        files[f"{stem}.{ext}"] = payload
    files.update(texts)
    return write_outputs_atomically(out_dir, files)


# -- commands -------------------------------------------------------------------


def cmd_validate(args) -> int:
    issues = validate_files(args.csv_path, args.schema_path)
    if issues:
        for issue in issues:
            print(issue)
        print(f"{len(issues)} issue(s)")
        return EXIT_DATA
    print("0 issues")
    return EXIT_OK


def cmd_loocv(args) -> int:
    config, seed, out_dir = _load(args)
    datasets = _load_datasets(config)
    runs = _run_all_loocv(config, datasets, seed, args.threads)

    residual_rows: list[tuple[str, ...]] = []
    metric_rows: list[tuple[str, str, MetricResult]] = []
    summaries: list[str] = []
    for (label, predictor), run in runs.items():
        table = report.residuals_table(run.residuals, run.fallback_ids)
        residual_rows.extend(table.rows)
        results = _metric_results(run.residuals, datasets[label], config, seed)
        metric_rows.extend((label, predictor, r) for r in results)
        notes = []
        if run.peeking_prone:
            notes.append("global subset search: feature subset chosen on all data (peeking-prone)")
        summaries.extend(report.summary_lines(run.residuals, results, run.fallback_count, notes))
        summaries.append("")

    tables = {
        "residuals": Table(header=report.RESIDUALS_HEADER, rows=tuple(residual_rows)),
        "metrics": report.metrics_table(metric_rows),
    }
    texts = {
        "manifest.json": _manifest(config, seed),
        "summary.txt": "\n".join(summaries) + "\n",
    }
    written = _emit(out_dir, args.format, tables, texts)
    for path in written:
        print(path)
    return EXIT_OK


def cmd_compare(args) -> int:
    config, seed, out_dir = _load(args)
    if len(config.predictors) < 2 and not config.comparison_records:
        raise ConfigError(f"{config.path}: compare needs at least 2 predictors")
    datasets = _load_datasets(config)
    runs = _run_all_loocv(config, datasets, seed, args.threads)

    records: list[ComparisonRecord] = []
    effect_rows: list[tuple[str, str, MetricResult]] = []
    residual_rows: list[tuple[str, ...]] = []
    for (label, predictor), run in runs.items():
        residual_rows.extend(report.residuals_table(run.residuals, run.fallback_ids).rows)

    pairs = [
        (a.name, b.name)
        for i, a in enumerate(config.predictors)
        for b in config.predictors[i + 1 :]
    ]
    for label, dataset in datasets.items():
        metric_values: dict[tuple[str, str], float] = {}
        for spec in config.predictors:
            run = runs[(label, spec.name)]
            for metric in config.metrics:
                metric_values[(spec.name, metric.label)] = metric.evaluate(run.residuals, dataset)
        for name_a, name_b in pairs:
            res_a = runs[(label, name_a)].residuals
            res_b = runs[(label, name_b)].residuals
            effect = cohens_d(res_a, res_b)
            effect_ci = bootstrap_cohens_d(
                res_a,
                res_b,
                b=config.bootstrap.b,
                confidence_level=config.bootstrap.level,
                seed=derive_seed(seed, label, name_a, name_b, "cohens_d"),
            )
            effect_rows.append((label, f"{name_a} vs {name_b}", effect_ci))
            for metric in config.metrics:
                records.append(
                    ComparisonRecord(
                        dataset_label=label,
                        predictor_a=name_a,
                        predictor_b=name_b,
                        metric=metric.label,
                        value_a=metric_values[(name_a, metric.label)],
                        value_b=metric_values[(name_b, metric.label)],
                        effect_size=effect,
                    )
                )

    # Each record file is its own vote-count block, alongside the live runs.
    sources: list[tuple[str, list[ComparisonRecord]]] = [("experiment", records)]
    for record_path in config.comparison_records:
        sources.append((Path(record_path).stem, report.load_comparison_records(record_path)))

    classified_all: list[ComparisonRecord] = []
    vote_rows: list[tuple[str, ...]] = []
    vote_lines: list[str] = []
    for source, source_records in sources:
        if not source_records:
            continue
        classified, votes = vote_count(source_records, config.comparison_epsilon)
        classified_all.extend(classified)
        for row in votes:
            vote_rows.append(
                (
                    source,
                    row.predictor_a,
                    row.predictor_b,
                    str(row.a_better),
                    str(row.b_better),
                    str(row.inconclusive),
                )
            )
            vote_lines.append(
                f"  [{source}] {row.predictor_a} vs {row.predictor_b}: "
                f"{row.a_better} / {row.b_better} / {row.inconclusive}"
            )

    tables: dict[str, Table] = {
        "comparisons": report.comparison_table(classified_all),
        "effects": report.metrics_table(effect_rows),
    }
    if residual_rows:
        tables["residuals"] = Table(header=report.RESIDUALS_HEADER, rows=tuple(residual_rows))
    multi_dataset = len(datasets) > 1 or bool(config.comparison_records)
    if multi_dataset:
        tables["votes"] = Table(
            header=("source", "predictor_a", "predictor_b", "results_plus", "results_minus", "results_equal"),
            rows=tuple(vote_rows),
        )

    lines = ["pairwise comparison verdicts:"]
    for rec in classified_all:
        lines.append(
            f"  [{rec.dataset_label}] {rec.predictor_a} vs {rec.predictor_b} on {rec.metric}: "
            f"{report.format_number(rec.value_a)} vs {report.format_number(rec.value_b)} "
            f"-> {rec.verdict}"
            + (f" (d={report.format_number(rec.effect_size)})" if rec.effect_size is not None else "")
        )
    if multi_dataset:
        lines.append("")
        lines.append("vote counts (a-better / b-better / inconclusive):")
        lines.extend(vote_lines)
    texts = {
        "manifest.json": _manifest(config, seed),
        "summary.txt": "\n".join(lines) + "\n",
    }
    written = _emit(out_dir, args.format, tables, texts)
    for path in written:
        print(path)
    return EXIT_OK


def cmd_subset_search(args) -> int:
    config, seed, out_dir = _load(args)
    spec = config.subset_search
    if spec is None:
        raise ConfigError(f"{config.path}: subset-search needs a 'subset_search' section")
    base = next(
        (p for p in config.predictors if p.kind == "analogy"),
        None,
    )
    if base is None:
        raise ConfigError(f"{config.path}: subset-search needs an analogy predictor")
    datasets = _load_datasets(config)

    rows = []
    lines = []
    for label, dataset in datasets.items():
        estimator = base.build()
        result = subset_search(
            dataset,
            estimator,
            mode=spec.mode,
            objective=spec.objective,
            seed=derive_seed(seed, label, "subset-search"),
        )
        for subset, value in result.trace:
            rows.append(
                (label, "+".join(subset), report.format_number(value), "0")
            )
        rows.append(
            (label, "+".join(result.subset), report.format_number(result.objective_value), "1")
        )
        lines.append(
            f"[{label}] best subset by {spec.objective.label} ({spec.mode}): "
            f"{', '.join(result.subset)} at {report.format_number(result.objective_value)}"
        )
    tables = {
        "subset_search": Table(
            header=("dataset", "subset", "objective", "chosen"), rows=tuple(rows)
        )
    }
    texts = {
        "manifest.json": _manifest(config, seed),
        "summary.txt": "\n".join(lines) + "\n",
    }
    written = _emit(out_dir, args.format, tables, texts)
    for path in written:
        print(path)
    return EXIT_OK


def cmd_sensitivity(args) -> int:
    config, seed, out_dir = _load(args)
    sens = config.sensitivity
    if sens is None:
        raise ConfigError(f"{config.path}: sensitivity needs a 'sensitivity' section")
    if not config.predictors:
        raise ConfigError(f"{config.path}: no predictors configured")
    datasets = _load_datasets(config)

    curve_rows: list[tuple[str, ...]] = []
    spread_rows: list[tuple[str, ...]] = []
    for label, dataset in datasets.items():
        for pred_spec in config.predictors:
            curve = sensitivity_curve(
                dataset,
                pred_spec.build(),
                list(sens.sizes),
                sens.repeats,
                seed=derive_seed(seed, label, pred_spec.name, "sensitivity"),
                metrics=config.metrics,
                order_feature=sens.order_feature,
            )
            curve_rows.extend(report.sensitivity_table(curve, label, pred_spec.name).rows)
            spread_rows.extend(report.sensitivity_spread_table(curve, label, pred_spec.name).rows)

    tables = {
        "sensitivity": Table(
            header=("dataset", "predictor", "size", "repeat", "metric", "value", "flagged", "n_test"),
            rows=tuple(curve_rows),
        ),
        "sensitivity_spread": Table(
            header=("dataset", "predictor", "size", "metric", "min", "median", "max"),
            rows=tuple(spread_rows),
        ),
    }
    texts = {"manifest.json": _manifest(config, seed)}
    written = _emit(out_dir, args.format, tables, texts)
    for path in written:
        print(path)
    return EXIT_OK


def _parse_target_values(dataset: Dataset, pairs: Sequence[str]) -> dict:
    kinds = {f.name: f.kind for f in dataset.active_predictors()}
    target: dict[str, float | str | None] = {name: None for name in kinds}
    for pair in pairs:
        if "=" not in pair:
            raise CliError(f"--value expects NAME=VALUE, got {pair!r}", EXIT_USAGE)
        name, _, raw = pair.partition("=")
        name = name.strip()
        raw = raw.strip()
        if name not in kinds:
            raise CliError(f"unknown predictor feature {name!r}", EXIT_USAGE)
        if raw in ("", "?"):
            target[name] = None
        elif kinds[name] in ("numeric", "boolean"):
            try:
                target[name] = float(raw)
            except ValueError:
                raise CliError(f"feature {name!r} expects a number, got {raw!r}", EXIT_USAGE) from None
        else:
            target[name] = raw
    return target


def cmd_estimate(args) -> int:
    config = load_config(args.config)
    ref = next((r for r in config.datasets if r.label == args.dataset), None)
    if ref is None:
        raise ConfigError(f"{config.path}: no dataset labelled {args.dataset!r}")
    dataset = ref.load()

    base = next((p for p in config.predictors if p.kind == "analogy"), None)
    estimator = base.build() if base is not None else AnalogyEstimator()
    if args.k is not None:
        estimator.set_params(k=args.k)
    if args.pooling:
        estimator.set_params(pooling=args.pooling)
    if args.adaptation:
        estimator.set_params(adaptation=args.adaptation)
    if args.subset:
        estimator.set_params(feature_subset=tuple(s.strip() for s in args.subset.split(",")))

    target = _parse_target_values(dataset, args.value)
    estimator.fit(dataset)
    prediction = estimator.predict_detailed(target)
    payload = {
        "dataset": args.dataset,
        "estimate": report.format_number(prediction.estimate),
        "target": target,
        "config": {
            "k": prediction.config.k,
            "pooling": prediction.config.pooling,
            "adaptation": prediction.config.adaptation,
            "feature_subset": list(prediction.config.feature_subset),
        },
        "donors": [
            {
                "case_id": d.case_id,
                "rank": d.rank,
                "distance": report.format_number(d.distance),
                "effort": d.effort,
                "adapted_effort": d.adapted_effort,
            }
            for d in prediction.donors
        ],
        "warnings": list(prediction.warnings),
    }
    print(json.dumps(payload, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    config = load_config(args.config)
    datasets = _load_datasets(config)
    if not datasets:
        raise ConfigError(f"{config.path}: serve requires at least one dataset")
    app = create_app(datasets, cors_origins=config.serve.cors_origins)
    host = args.host or config.serve.host
    port = args.port if args.port is not None else config.serve.port
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    except OSError as exc:
        raise CliError(f"cannot bind {host}:{port} ({exc})", EXIT_INTERNAL) from exc
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
