import csv
import io
import json
import math

import numpy as np
import pytest

from s5eval.errors import ManifestError
from s5eval.evaluation import (aggregate, evaluate_entry, evaluate_manifest, load_manifest, parse_manifest,
                               report_json_lines, write_report)
from s5eval.metrics import MetricConfig
from s5eval.wavio import write_wav


@pytest.fixture
def small(tmp_path, rng):
    """Two references, one mixture, a few estimate files."""
    n = 800
    refs = [rng.standard_normal(n) for _ in range(2)]
    mix = np.stack([refs[0] + refs[1], rng.standard_normal(n)], axis=1)
    write_wav(tmp_path / "mix.wav", mix, 16000)
    for i, r in enumerate(refs):
        write_wav(tmp_path / f"r{i}.wav", r, 16000)
        write_wav(tmp_path / f"e{i}.wav", r + 0.1 * rng.standard_normal(n), 16000)
    write_wav(tmp_path / "short.wav", refs[0][:400], 16000)
    (tmp_path / "bad.wav").write_text("garbage")
    return tmp_path


def entry(i, ests, subset=None, refs=(("a", "r0.wav"), ("b", "r1.wav"))):
    d = {"id": f"m{i}", "mixture": "mix.wav",
         "references": [{"label": x, "path": p} for x, p in refs],
         "estimates": [{"label": x, "path": p} for x, p in ests]}
    if subset:
        d["subset"] = subset
    return d


def write_manifest(base, mixtures, **extra):
    path = base / "manifest.json"
    path.write_text(json.dumps({"mixtures": mixtures, **extra}))
    return path


class TestManifest:
    def test_parse(self, tmp_path):
        m = parse_manifest({"mixtures": [entry(0, [("a", "e0.wav")], "DupSet")]}, tmp_path)
        e = m.entries[0]
        assert e.mixture_path == tmp_path / "mix.wav" and e.ref_channel_index == 0
        assert e.references[0] == ("a", tmp_path / "r0.wav") and e.subset_tag == "DupSet"

    @pytest.mark.parametrize("doc", [
        {},
        {"mixtures": {}},
        {"mixtures": [{"id": "x"}]},
        {"mixtures": [{"id": "x", "mixture": "m.wav", "references": [{"path": "r.wav"}]}]},
        {"mixtures": [{"id": "x", "mixture": "m.wav"}, {"id": "x", "mixture": "m.wav"}]},
    ])
    def test_invalid(self, tmp_path, doc):
        with pytest.raises(ManifestError):
            parse_manifest(doc, tmp_path)

    def test_unreadable(self, tmp_path):
        (tmp_path / "m.json").write_text("{not json")
        with pytest.raises(ManifestError):
            load_manifest(tmp_path / "m.json")
        with pytest.raises(ManifestError):
            load_manifest(tmp_path / "missing.json")


def test_errors_are_isolated(small):
    mixtures = [
        entry(0, [("a", "e0.wav"), ("b", "e1.wav")], "NoDupSet"),
        entry(1, [("a", "missing.wav")]),
        entry(2, [("a", "bad.wav")]),
        entry(3, [("a", "short.wav")]),
        entry(4, [], refs=()),
        entry(5, [("a", "e0.wav")], refs=()),
        entry(6, []),
        entry(7, [("a", "e0.wav")], refs=[("a", "r0.wav")] * 4),
    ]
    report = evaluate_manifest(load_manifest(write_manifest(small, mixtures)), workers=1)
    status = {r["id"]: (r["status"], r.get("error", {}).get("code")) for r in report.rows}
    assert status == {
        "m0": ("ok", None),
        "m1": ("error", "io_error"),
        "m2": ("error", "corrupt_file"),
        "m3": ("error", "length_mismatch"),
        "m4": ("skipped", None),
        "m5": ("error", "empty_reference"),
        "m6": ("ok", None),
        "m7": ("error", "manifest_error"),
    }
    rows = {r["id"]: r for r in report.rows}
    assert rows["m6"]["metric_db"] == 0.0 and rows["m6"]["n_fn"] == 2
    assert rows["m0"]["metric_db"] > 15.0
    overall = report.aggregates[0]
    assert overall["n_errors"] == 5 and overall["n_skipped"] == 1 and overall["n_mixtures"] == 2
    assert overall["mean_metric_db"] == (rows["m0"]["metric_db"] + 0.0) / 2


def test_channel_index(small):
    mixtures = [entry(0, [("a", "e0.wav")])]
    m1 = entry(1, [("a", "e0.wav")])
    m1["ref_channel_index"] = 1
    m2 = entry(2, [("a", "e0.wav")])
    m2["ref_channel_index"] = 2
    report = evaluate_manifest(load_manifest(write_manifest(small, mixtures + [m1, m2])))
    rows = {r["id"]: r for r in report.rows}
    assert rows["m0"]["metric_db"] != rows["m1"]["metric_db"]
    assert rows["m2"]["error"]["code"] == "channel_out_of_range"


def test_vocabulary(small):
    path = write_manifest(small, [entry(0, [("a", "e0.wav")]), entry(1, [("zzz", "e0.wav")])],
                          vocabulary=["a", "b"])
    rows = {r["id"]: r for r in evaluate_manifest(load_manifest(path)).rows}
    assert rows["m0"]["status"] == "ok"
    assert rows["m1"]["error"]["code"] == "unknown_label"
    rows = {r["id"]: r for r in evaluate_manifest(load_manifest(path), vocabulary=["a", "b", "zzz"]).rows}
    assert rows["m1"]["status"] == "ok"


def test_penalties_reach_rows(small):
    e = parse_manifest({"mixtures": [entry(0, [("a", "e0.wav"), ("c", "e1.wav")])]}, small).entries[0]
    plain = evaluate_entry(e)
    penal = evaluate_entry(e, MetricConfig(penalty_fn=-3.0, penalty_fp=-9.0))
    assert penal["metric_db"] == pytest.approx(plain["metric_db"] - 12.0 / 3, abs=1e-12)


def test_aggregate_by_subset():
    rows = [{"id": str(i), "status": "ok", "subset": s, "metric_db": v}
            for i, (s, v) in enumerate([("A", 1.0), ("A", 3.0), ("B", 8.0), (None, 0.0)])]
    rows.append({"id": "x", "status": "error", "subset": "A"})
    agg = aggregate(rows)
    assert [(a["subset"], a["n_mixtures"], a["mean_metric_db"]) for a in agg] == [
        (None, 4, 3.0), ("A", 2, 2.0), ("B", 1, 8.0)]
    assert agg[0]["n_errors"] == 1


def test_fixture_report(fixture12, tmp_path):
    manifest = load_manifest(fixture12)
    serial = evaluate_manifest(manifest, workers=1)
    parallel = evaluate_manifest(manifest, workers=4)
    assert report_json_lines(serial) == report_json_lines(parallel)
    assert [r["id"] for r in serial.rows] == sorted(e.id for e in manifest.entries)
    for row in serial.rows:
        assert row["status"] == "ok"
        assert row["metric_db"] == pytest.approx(row["expected_metric_db"], abs=1e-6)
    subsets = {r["subset"] for r in serial.rows}
    assert subsets <= {"DupSet", "NoDupSet"}
    for a in serial.aggregates[1:]:
        vals = [r["metric_db"] for r in serial.rows if r["subset"] == a["subset"]]
        assert a["mean_metric_db"] == math.fsum(vals) / len(vals)

    lines = report_json_lines(serial).splitlines()
    first = json.loads(lines[0])
    assert first["type"] == "config" and first["sdr_cap_db"] == 60.0
    assert [json.loads(x)["type"] for x in lines[1:13]] == ["mixture"] * 12

    path = write_report(serial, tmp_path / "r.csv", "csv")
    table = list(csv.DictReader(io.StringIO(path.read_text())))
    assert len(table) == 12 + len(serial.aggregates)
    assert float(table[0]["metric_db"]) == serial.rows[0]["metric_db"]
    sidecar = json.loads((tmp_path / "r.csv.summary.json").read_text())
    assert sidecar["config"] == serial.config
    with pytest.raises(ValueError):
        write_report(serial, tmp_path / "r.xml", "xml")
