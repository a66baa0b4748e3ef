import json

import numpy as np
import pytest

from mixlab import run_index
from mixlab.artifacts import (ArtifactEntry, RunManifest, library_versions, read_manifest, write_artifacts, write_csv,
                              write_json, write_manifest)
from mixlab.core import ExperimentResult
from mixlab.utils import sha256_file


def _manifest(run_id="abc123", started="2026-01-02T03:04:05+00:00", artifacts=()):
    return RunManifest(
        run_id=run_id,
        experiment="pressure",
        config_hash="f" * 64,
        seed=5,
        threads=2,
        started_at=started,
        wall_time_s=0.25,
        versions=library_versions(),
        artifacts=list(artifacts),
    )


def test_write_csv_formats_cells(tmp_path):
    path = tmp_path / "table.csv"
    write_csv(path, [{"t": 0.1, "n": 3, "ok": True, "word": "01"}, {"t": np.float64(1 / 3), "n": np.int64(4)}])
    assert path.read_text() == "t,n,ok,word\n0.1,3,true,01\n0.3333333333333333,4,,\n"


def test_write_csv_without_rows(tmp_path):
    path = tmp_path / "empty.csv"
    write_csv(path, [])
    assert path.read_text() == ""


def test_write_json_handles_complex_and_arrays(tmp_path):
    path = tmp_path / "doc.json"
    write_json(path, {"z": 1 + 2j, "v": np.array([1.0, 2.5]), "b": {"k": (1, 2)}})
    assert json.loads(path.read_text()) == {"b": {"k": [1, 2]}, "v": [1.0, 2.5], "z": {"im": 2.0, "re": 1.0}}


def test_write_artifacts_lists_every_file(tmp_path):
    result = ExperimentResult(
        tables={"b_table": [{"x": 1.0}], "a_table": [{"x": 2.0}, {"x": 3.0}]},
        documents={"summary": {"value": 1.5}},
    )
    out_dir = tmp_path / "out"
    entries = write_artifacts(out_dir, result)
    assert [(e.path, e.kind, e.rows) for e in entries] == [
        ("a_table.csv", "csv", 2), ("b_table.csv", "csv", 1), ("summary.json", "json", 0)
    ]
    for entry in entries:
        assert entry.sha256 == sha256_file(out_dir / entry.path)


def test_manifest_round_trip(tmp_path):
    manifest = _manifest(artifacts=[ArtifactEntry(path="p.json", kind="json", sha256="0" * 64)])
    path = write_manifest(tmp_path, manifest)
    assert path.name == "manifest.json"
    assert read_manifest(tmp_path) == manifest
    assert set(manifest.versions) >= {"mixlab", "python", "numpy", "scipy", "pydantic"}


def test_run_index(tmp_path):
    db = str(tmp_path / "index" / "runs.db")
    assert run_index.get_runs(db) == []
    first = _manifest("first", "2026-01-01T00:00:00+00:00",
                      [ArtifactEntry(path="b.csv", kind="csv", sha256="1" * 64, rows=4),
                       ArtifactEntry(path="a.json", kind="json", sha256="2" * 64)])
    second = _manifest("second", "2026-02-01T00:00:00+00:00")
    run_index.record_run(db, first, "results/first")
    run_index.record_run(db, second, "results/second")

    runs = run_index.get_runs(db)
    assert [r["run_id"] for r in runs] == ["second", "first"]
    assert runs[1]["output_dir"] == "results/first"
    assert runs[1]["seed"] == 5
    assert runs[1]["wall_time_s"] == pytest.approx(0.25)
    assert [r["run_id"] for r in run_index.get_runs(db, limit=1)] == ["second"]

    artifacts = run_index.get_artifacts(db, "first")
    assert [(a["path"], a["rows"]) for a in artifacts] == [("a.json", 0), ("b.csv", 4)]
    assert run_index.get_artifacts(db, "second") == []


def test_rerecording_a_run_replaces_it(tmp_path):
    db = str(tmp_path / "runs.db")
    run_index.record_run(db, _manifest(), "old")
    run_index.record_run(db, _manifest(), "new")
    runs = run_index.get_runs(db)
    assert len(runs) == 1
    assert runs[0]["output_dir"] == "new"
