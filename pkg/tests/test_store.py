"""Artifact store: layout, integrity sidecars, force semantics."""

import json
import stat
from concurrent.futures import ThreadPoolExecutor

import pytest

from arms.domain import snapshot_to_dict
from arms.errors import (
    ExistsWithoutForce,
    IoError,
    NotFound,
    ParseError,
    ValidationFailed,
)
from arms.jsonio import canonical_bytes, sha256_hex
from arms.reputation import (
    benchmark_from_dict,
    benchmark_to_dict,
    extend_graph_for_actor,
    report_to_dict,
    score_actor,
)
from arms.store import KINDS, Store


@pytest.fixture
def store(tmp_path):
    return Store(tmp_path / "artifacts")


@pytest.fixture
def report_doc(genuine_snapshot, golden_benchmark, cfg):
    graph = extend_graph_for_actor(genuine_snapshot, golden_benchmark)
    return report_to_dict(
        score_actor(genuine_snapshot, graph, golden_benchmark, cfg))


def test_layout_created_with_private_reports_dir(store):
    for kind in KINDS:
        assert (store.layout.root / kind).is_dir()
    assert store.layout.cache_dir.is_dir()
    mode = stat.S_IMODE(store.layout.kind_dir("reports").stat().st_mode)
    assert mode == 0o700


def test_round_trip_every_kind(store, genuine_snapshot, golden_benchmark_doc,
                               report_doc):
    overlay_doc = {
        "overlay_schema_version": 1,
        "signal_weights": {f"S{n}": 1.0 for n in range(1, 8)},
        "source": {"seed": 42},
    }
    study_doc = {
        "study_schema_version": 1, "seed": 42,
        "coefficients": {"intercept": 0.1}, "auc_model_holdout": 0.8,
    }
    docs = {
        "snapshots": snapshot_to_dict(genuine_snapshot),
        "benchmarks": golden_benchmark_doc,
        "reports": report_doc,
        "overlays": overlay_doc,
    }
    for kind, payload in docs.items():
        store.put(kind, "subject", payload)
        assert store.get(kind, "subject") == payload
        assert store.list_ids(kind) == ["subject"]
        assert store.exists(kind, "subject")
    store.put("reports", "study", study_doc)
    assert store.get("reports", "study") == study_doc


def test_put_without_force_refuses_overwrite(store, report_doc):
    store.put("reports", "actor", report_doc)
    with pytest.raises(ExistsWithoutForce):
        store.put("reports", "actor", report_doc)
    changed = dict(report_doc, final_reputation=0.123)
    store.put("reports", "actor", changed, force=True)
    assert store.get("reports", "actor")["final_reputation"] == 0.123


def test_get_missing_is_not_found(store):
    with pytest.raises(NotFound):
        store.get("reports", "ghost")


def test_sidecar_holds_content_fingerprint(store, report_doc):
    path = store.put("reports", "actor", report_doc)
    sidecar = path.with_suffix(".json.sha256")
    assert sidecar.read_text("ascii") == sha256_hex(path.read_bytes()) + "\n"


def test_tampered_artifact_fails_integrity(store, report_doc):
    path = store.put("reports", "actor", report_doc)
    data = bytearray(path.read_bytes())
    data[data.index(b'"')] = ord("'")
    path.write_bytes(bytes(data))
    with pytest.raises(ValidationFailed) as exc:
        store.get("reports", "actor")
    assert any(v.code == "INTEGRITY_MISMATCH" for v in exc.value.violations)


def test_corrupt_json_with_matching_sidecar_is_parse_error(store):
    path = store.layout.kind_dir("overlays") / "junk.json"
    raw = b"{not json"
    path.write_bytes(raw)
    path.with_suffix(".json.sha256").write_text(sha256_hex(raw) + "\n", "ascii")
    with pytest.raises(ParseError):
        store.get("overlays", "junk")


def test_kind_validators_run_on_read(store):
    store.put("overlays", "empty", {"signal_weights": {}})
    with pytest.raises(ValidationFailed):
        store.get("overlays", "empty")
    store.put("reports", "bare", {"actor_id": "x"})
    with pytest.raises(ValidationFailed) as exc:
        store.get("reports", "bare")
    assert all(v.code == "MISSING_FIELD" for v in exc.value.violations)
    store.put("snapshots", "hollow", {"schema_version": 1})
    with pytest.raises((ParseError, ValidationFailed)):
        store.get("snapshots", "hollow")


def test_artifact_id_pattern_enforced(store, report_doc):
    for bad in ("", "../evil", ".hidden", "a b", "a/b"):
        with pytest.raises(IoError):
            store.put("reports", bad, report_doc)
        with pytest.raises(IoError):
            store.get("reports", bad)


def test_unknown_kind_rejected(store, report_doc):
    with pytest.raises(IoError):
        store.put("sketches", "x", report_doc)


def test_no_temp_files_left_behind(store, report_doc):
    store.put("reports", "actor", report_doc)
    leftovers = list(store.layout.root.rglob("*.tmp"))
    assert leftovers == []


def test_concurrent_puts_to_distinct_ids(store):
    payload = {"overlay_schema_version": 1,
               "signal_weights": {"S1": 1.0}, "source": {}}

    def write(i):
        return store.put("overlays", f"overlay-{i:03d}", payload)

    with ThreadPoolExecutor(max_workers=8) as pool:
        list(pool.map(write, range(24)))
    assert store.list_ids("overlays") == [f"overlay-{i:03d}" for i in range(24)]
    for i in range(24):
        assert store.get("overlays", f"overlay-{i:03d}") == payload


def test_golden_benchmark_survives_the_store(store, golden_benchmark_doc,
                                             golden_benchmark):
    store.put("benchmarks", "golden", golden_benchmark_doc)
    loaded = store.get("benchmarks", "golden")
    assert loaded == golden_benchmark_doc
    rebuilt = benchmark_from_dict(loaded)
    assert rebuilt.sorted_composites == golden_benchmark.sorted_composites
    assert rebuilt.config_fingerprint == golden_benchmark.config_fingerprint
    assert canonical_bytes(benchmark_to_dict(rebuilt)) == canonical_bytes(
        golden_benchmark_doc)
