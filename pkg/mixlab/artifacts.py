"""Artifact files of a run and the manifest that accounts for them.

CSV cells use the shortest round-trip float representation; JSON goes through the same
conversion for complex numbers and arrays. Bodies depend only on (config, seed), so two runs
produce byte-identical CSVs; only the manifest records times.
"""
import csv
import json
import logging
import os
import platform
from pathlib import Path
from typing import Any, Dict, List

import numpy
import pydantic
import scipy
from pydantic import BaseModel, Field

from . import __version__
from .core import ExperimentResult
from .utils import format_cell, sha256_file, to_jsonable

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"


class ArtifactEntry(BaseModel):
    path: str
    kind: str
    sha256: str
    rows: int = 0


class RunManifest(BaseModel):
    run_id: str
    experiment: str
    config_hash: str
    seed: int
    threads: int
    started_at: str
    wall_time_s: float
    versions: Dict[str, str] = Field(default_factory=dict)
    artifacts: List[ArtifactEntry] = Field(default_factory=list)


def library_versions() -> Dict[str, str]:
    return {
        "mixlab": __version__,
        "python": platform.python_version(),
        "numpy": numpy.__version__,
        "scipy": scipy.__version__,
        "pydantic": pydantic.VERSION,
    }


def write_csv(path: Path, rows: List[dict]) -> None:
    """Columns are the keys of the first row, in order."""
    columns: List[str] = list(rows[0]) if rows else []
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        if columns:
            writer.writerow(columns)
        for row in rows:
            writer.writerow([format_cell(row.get(c)) for c in columns])


def write_json(path: Path, data: Any) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(json.dumps(to_jsonable(data), indent=2, sort_keys=True))
        handle.write("\n")


def write_artifacts(out_dir: Path, result: ExperimentResult) -> List[ArtifactEntry]:
    out_dir = Path(out_dir)
    os.makedirs(out_dir, exist_ok=True)
    entries = []
    for name, rows in sorted(result.tables.items()):
        path = out_dir / f"{name}.csv"
        write_csv(path, rows)
        entries.append(ArtifactEntry(path=path.name, kind="csv", sha256=sha256_file(path), rows=len(rows)))
    for name, doc in sorted(result.documents.items()):
        path = out_dir / f"{name}.json"
        write_json(path, doc)
        entries.append(ArtifactEntry(path=path.name, kind="json", sha256=sha256_file(path)))
    logger.info(f"Wrote {len(entries)} artifacts to {out_dir}")
    return entries


def write_manifest(out_dir: Path, manifest: RunManifest) -> Path:
    path = Path(out_dir) / MANIFEST_NAME
    write_json(path, manifest.model_dump())
    return path


def read_manifest(out_dir: Path) -> RunManifest:
    with open(Path(out_dir) / MANIFEST_NAME, encoding="utf-8") as handle:
        return RunManifest.model_validate(json.load(handle))
