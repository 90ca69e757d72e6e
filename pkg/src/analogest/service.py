"""Read-only JSON API for interactive estimation.

Exposes loaded datasets, analogy retrieval, and what-if prediction to the
browser UI. Estimates and distances are serialized as decimal strings in
shortest round-trip form so cross-language clients see exactly the numbers
the library computed. Excluded-peeking feature values never appear in any
payload.
"""

from __future__ import annotations

from typing import Mapping

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field

from . import __version__
from .analogy import AnalogyError, feature_gaps
from .dataset import Dataset, DatasetError
from .estimators import AnalogyEstimator

API_PREFIX = "/api/v1"


class EstimateConfigOverrides(BaseModel):
    k: int = 3
    pooling: str = "mean"
    adaptation: str = "none"
    feature_subset: list[str] | None = None
    feature_weights: dict[str, float] | None = None

    model_config = {"extra": "forbid"}


class EstimateRequest(BaseModel):
    dataset: str
    target: dict[str, float | str | None]
    config: EstimateConfigOverrides = Field(default_factory=EstimateConfigOverrides)

    model_config = {"extra": "forbid"}


def _number(value: float) -> str:
    return repr(float(value))


def _feature_payload(dataset: Dataset) -> list[dict]:
    payload = []
    for feat in dataset.schema:
        entry: dict[str, object] = {
            "name": feat.name,
            "kind": feat.kind,
            "role": feat.role,
            "units": feat.units,
            "size_driver": feat.size_driver,
        }
        if feat.role == "predictor" and feat.kind in ("numeric", "boolean"):
            try:
                lo, hi = dataset.feature_range(feat.name)
                entry["min"] = lo
                entry["max"] = hi
            except DatasetError:
                entry["min"] = entry["max"] = None
        if feat.role == "predictor" and feat.kind == "categorical":
            levels = sorted(
                {
                    str(c.values[feat.name])
                    for c in dataset.cases
                    if c.values.get(feat.name) is not None
                }
            )
            entry["levels"] = levels
        payload.append(entry)
    return payload


def create_app(datasets: Mapping[str, Dataset], cors_origins: tuple[str, ...] = ("*",)) -> FastAPI:
    if not datasets:
        raise DatasetError("the estimation service requires at least one dataset")

    app = FastAPI(title="analogest estimation service", version=__version__)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=list(cors_origins),
        allow_methods=["GET", "POST"],
        allow_headers=["*"],
    )

    @app.get(f"{API_PREFIX}/health")
    def health() -> dict:
        return {"version": __version__, "datasets": sorted(datasets)}

    @app.get(f"{API_PREFIX}/datasets")
    def list_datasets() -> list[dict]:
        return [
            {
                "label": label,
                "n": ds.n,
                "provenance": ds.provenance,
                "target_units": ds.target.units,
                "features": _feature_payload(ds),
            }
            for label, ds in sorted(datasets.items())
        ]

    @app.get(API_PREFIX + "/datasets/{label}/cases/{case_id}")
    def case_detail(label: str, case_id: str) -> dict:
        ds = datasets.get(label)
        if ds is None:
            raise HTTPException(status_code=404, detail=f"unknown dataset {label!r}")
        try:
            case = ds.case(case_id)
        except DatasetError:
            raise HTTPException(status_code=404, detail=f"unknown case {case_id!r}") from None
        # Missing values are explicit nulls, never absent keys.
        return {
            "id": case.id,
            "values": ds.predictor_values(case),
            "effort": case.effort,
        }

    @app.post(API_PREFIX + "/estimate")
    def estimate(request: EstimateRequest) -> dict:
        ds = datasets.get(request.dataset)
        if ds is None:
            raise HTTPException(status_code=400, detail=f"unknown dataset {request.dataset!r}")
        active = {f.name for f in ds.active_predictors()}
        unknown = set(request.target) - active
        if unknown:
            raise HTTPException(
                status_code=400,
                detail=f"unknown or non-predictor features: {sorted(unknown)}",
            )
        overrides = request.config
        if not 1 <= overrides.k <= ds.n:
            raise HTTPException(
                status_code=400, detail=f"k must be between 1 and {ds.n}"
            )
        if overrides.feature_subset is not None:
            bad = set(overrides.feature_subset) - active
            if bad:
                raise HTTPException(
                    status_code=400, detail=f"subset names unknown features: {sorted(bad)}"
                )
        target = {name: request.target.get(name) for name in active}
        if all(v is None for v in target.values()):
            raise HTTPException(status_code=422, detail="target has no usable feature values")

        estimator = AnalogyEstimator(
            k=overrides.k,
            pooling=overrides.pooling,
            adaptation=overrides.adaptation,
            feature_subset=tuple(overrides.feature_subset) if overrides.feature_subset else None,
            feature_weights=overrides.feature_weights or {},
        )
        try:
            estimator.fit(ds)
            prediction = estimator.predict_detailed(target)
        except (AnalogyError, DatasetError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc

        donors = []
        for donor in prediction.donors:
            gaps = feature_gaps(
                target,
                estimator.case_values_[donor.case_id],
                estimator.config_,
                estimator.ranges_,
            )
            donors.append(
                {
                    "case_id": donor.case_id,
                    "rank": donor.rank,
                    "distance": _number(donor.distance),
                    "effort": donor.effort,
                    "adapted_effort": donor.adapted_effort,
                    "feature_gaps": gaps,
                }
            )
        return {
            "estimate": _number(prediction.estimate),
            "donors": donors,
            "config": {
                "k": prediction.config.k,
                "pooling": prediction.config.pooling,
                "adaptation": prediction.config.adaptation,
                "feature_subset": list(prediction.config.feature_subset),
                "feature_weights": dict(prediction.config.feature_weights),
            },
            "adapted": prediction.adapted,
            "warnings": list(prediction.warnings),
        }

    return app
