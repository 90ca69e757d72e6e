"""Access to the datasets shipped inside the package."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from .dataset import Dataset, load_dataset

BUNDLED_DATASETS = ("toy4", "duplicates20", "synthetic40", "demo_mixed")


def bundled_path(filename: str) -> Path:
    path = Path(str(resources.files("analogest").joinpath("data", filename)))
    if not path.exists():
        raise FileNotFoundError(f"no bundled file named {filename!r}")
    return path


def load_bundled(stem: str) -> Dataset:
    """Load a bundled dataset by stem, e.g. ``toy4``."""
    return load_dataset(
        bundled_path(f"{stem}.csv"), bundled_path(f"{stem}.schema.json"), label=stem
    )
