"""Regenerate the bundled datasets under src/analogest/data/.

All bundled data is synthetic and produced deterministically from the seeds
below; nothing here is measured from real projects. Run from the repo root:

    python scripts/make_bundled_data.py
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

DATA_DIR = Path(__file__).resolve().parent.parent / "src" / "analogest" / "data"

SYNTHETIC40_SEED = 2025
DEMO_SEED = 7


def write_csv(name: str, header: list[str], rows: list[list[object]]) -> None:
    path = DATA_DIR / name
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(header)
        writer.writerows(rows)
    print(f"wrote {path}")


def write_schema(name: str, features: list[dict], provenance: str) -> None:
    path = DATA_DIR / name
    path.write_text(
        json.dumps({"features": features, "provenance": provenance}, indent=2) + "\n",
        encoding="utf-8",
    )
    print(f"wrote {path}")


def numeric(name: str, role: str = "predictor", units: str = "", size_driver: bool = False) -> dict:
    return {"name": name, "kind": "numeric", "role": role, "units": units, "size_driver": size_driver}


def fmt(value: float) -> object:
    if value == int(value):
        return int(value)
    return repr(float(value))


def make_toy4() -> None:
    write_schema(
        "toy4.schema.json",
        [
            {"name": "id", "kind": "categorical", "role": "case-id", "units": "", "size_driver": False},
            numeric("size", units="function points", size_driver=True),
            numeric("complexity", units="rating 1-5"),
            numeric("effort", role="target", units="person hours"),
        ],
        "Hand-crafted 4-case fixture; small enough to trace every distance by hand.",
    )
    write_csv(
        "toy4.csv",
        ["id", "size", "complexity", "effort"],
        [
            ["A", 100, 1, 1000],
            ["B", 200, 2, 2000],
            ["C", 300, 3, 3000],
            ["D", 400, 5, 4800],
        ],
    )


def make_duplicates20() -> None:
    write_schema(
        "duplicates20.schema.json",
        [
            {"name": "id", "kind": "categorical", "role": "case-id", "units": "", "size_driver": False},
            numeric("size", units="function points", size_driver=True),
            numeric("complexity", units="rating 1-5"),
            numeric("effort", role="target", units="person hours"),
        ],
        "Hand-crafted: 10 distinct projects, each present twice, so the nearest "
        "analogy of every case is its exact duplicate.",
    )
    base = [
        (120, 1, 900),
        (150, 2, 1300),
        (200, 2, 1800),
        (240, 3, 2400),
        (300, 3, 2900),
        (340, 4, 3600),
        (400, 4, 4100),
        (450, 5, 5000),
        (520, 5, 5600),
        (600, 6, 6800),
    ]
    rows: list[list[object]] = []
    for i, (size, cx, effort) in enumerate(base, start=1):
        rows.append([f"P{i:02d}a", size, cx, effort])
        rows.append([f"P{i:02d}b", size, cx, effort])
    write_csv("duplicates20.csv", ["id", "size", "complexity", "effort"], rows)


def make_synthetic40() -> None:
    rng = np.random.default_rng(SYNTHETIC40_SEED)
    rows: list[list[object]] = []
    for i in range(1, 41):
        size = float(np.round(rng.uniform(50, 500), 1))
        complexity = float(np.round(rng.uniform(1, 5), 2))
        noise = float(rng.normal(0, 120))
        effort = float(np.round(10.0 * size + 300.0 * complexity + noise, 1))
        effort = max(effort, 150.0)
        rows.append([f"S{i:02d}", fmt(size), fmt(complexity), fmt(effort)])
    write_schema(
        "synthetic40.schema.json",
        [
            {"name": "id", "kind": "categorical", "role": "case-id", "units": "", "size_driver": False},
            numeric("size", units="function points", size_driver=True),
            numeric("complexity", units="rating 1-5"),
            numeric("effort", role="target", units="person hours"),
        ],
        f"Synthetic homogeneous data (effort = 10*size + 300*complexity + noise), "
        f"generated by scripts/make_bundled_data.py with seed {SYNTHETIC40_SEED}.",
    )
    write_csv("synthetic40.csv", ["id", "size", "complexity", "effort"], rows)


def make_demo_mixed() -> None:
    rng = np.random.default_rng(DEMO_SEED)
    domains = ["telecom", "banking", "retail", "embedded"]
    rows: list[list[object]] = []
    for i in range(1, 26):
        size = float(np.round(rng.uniform(40, 800), 0))
        experience = float(np.round(rng.uniform(0.5, 12), 1))
        domain = domains[int(rng.integers(0, len(domains)))]
        rad = int(rng.integers(0, 2))
        base = 8.0 * size + 250.0 * (12.0 - experience) + (400.0 if domain == "embedded" else 0.0)
        effort = float(np.round(base * (0.85 if rad else 1.0) + rng.normal(0, 300), 0))
        effort = max(effort, 200.0)
        loc = float(np.round(effort * rng.uniform(8, 14), 0))
        exp_cell: object = fmt(experience)
        domain_cell: object = domain
        if i in (4, 17):
            exp_cell = ""  # missing
        if i == 9:
            domain_cell = "?"
        rows.append([f"D{i:02d}", fmt(size), exp_cell, domain_cell, rad, fmt(loc), fmt(effort)])
    write_schema(
        "demo_mixed.schema.json",
        [
            {"name": "id", "kind": "categorical", "role": "case-id", "units": "", "size_driver": False},
            numeric("size", units="function points", size_driver=True),
            numeric("team_experience", units="years"),
            {"name": "domain", "kind": "categorical", "role": "predictor", "units": "", "size_driver": False},
            {"name": "rad", "kind": "boolean", "role": "predictor", "units": "", "size_driver": False},
            numeric("loc", role="excluded-peeking", units="lines of code"),
            numeric("effort", role="target", units="person hours"),
        ],
        f"Synthetic demonstration data with a categorical, a boolean, missing "
        f"cells, and a late-availability LOC column; generated by "
        f"scripts/make_bundled_data.py with seed {DEMO_SEED}.",
    )
    write_csv(
        "demo_mixed.csv",
        ["id", "size", "team_experience", "domain", "rad", "loc", "effort"],
        rows,
    )


def make_review_fixtures() -> None:
    # Encodings of two published tallies comparing analogy against regression:
    # one review of 20 papers split 9/7/4 and one of 40 study-dataset pairs
    # split 36/4/0. Values are synthetic; only the verdict pattern matters.
    header = ["dataset_label", "predictor_a", "predictor_b", "metric", "value_a", "value_b"]

    def rows_for(total: int, a_better: int, b_better: int, label: str) -> list[list[object]]:
        rows: list[list[object]] = []
        for i in range(1, total + 1):
            if i <= a_better:
                value_a, value_b = 40.0 + i, 52.0 + 2 * i
            elif i <= a_better + b_better:
                value_a, value_b = 63.0 + 2 * i, 45.0 + i
            else:
                value_a = value_b = 50.0 + i
            rows.append(
                [f"{label}-{i:02d}", "analogy", "regression", "mmre", fmt(value_a), fmt(value_b)]
            )
        return rows

    write_csv("review_votes_papers.csv", header, rows_for(20, 9, 7, "paper"))
    write_csv("review_votes_studies.csv", header, rows_for(40, 36, 4, "study"))


if __name__ == "__main__":
    DATA_DIR.mkdir(parents=True, exist_ok=True)
    make_toy4()
    make_duplicates20()
    make_synthetic40()
    make_demo_mixed()
    make_review_fixtures()
