"""Manifest loading, batch evaluation and report writing.

A manifest is a JSON document::

    {
      "vocabulary": ["Speech", "Dishes", ...],        # optional
      "mixtures": [
        {
          "id": "mix_00000",
          "mixture": "mix_00000/mixture.wav",
          "ref_channel_index": 0,                      # 0-based
          "references": [{"label": "Speech", "path": "..."}],
          "estimates":  [{"label": "Speech", "path": "..."}],
          "subset": "DupSet"                           # optional
        }
      ]
    }

Paths are relative to the manifest file. ``ref_channel_index`` is 0-based:
the omnidirectional channel of a first-order Ambisonics recording, often
called "channel 1" in dataset documentation, is index 0 here.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .core import check_compatible
from .errors import EmptyReference, ManifestError, S5EvalError
from .grouping import K_MAX, LabeledSources, check_vocabulary
from .metrics import DEFAULT_CONFIG, MetricConfig, ca_pi_sdri
from .wavio import load_channel

WORKERS_ENV = "S5EVAL_WORKERS"
REPORT_FORMATS = ("json-lines", "csv")


@dataclass(frozen=True)
class MixtureEntry:
    id: str
    mixture_path: Path
    references: tuple[tuple[str, Path], ...]
    estimates: tuple[tuple[str, Path], ...]
    ref_channel_index: int = 0
    subset_tag: Optional[str] = None
    expected_metric_db: Optional[float] = None


@dataclass(frozen=True)
class Manifest:
    entries: tuple[MixtureEntry, ...]
    vocabulary: Optional[tuple[str, ...]] = None
    path: Optional[Path] = None

    def get(self, entry_id: str) -> MixtureEntry:
        for e in self.entries:
            if e.id == entry_id:
                return e
        raise KeyError(entry_id)


def _sources(raw, base: Path, where: str) -> tuple[tuple[str, Path], ...]:
    if not isinstance(raw, list):
        raise ManifestError(f"{where} must be a list")
    out = []
    for item in raw:
        try:
            out.append((str(item["label"]), base / item["path"]))
        except (TypeError, KeyError) as exc:
            raise ManifestError(f"{where}: every source needs 'label' and 'path' ({exc})") from None
    return tuple(out)


def parse_manifest(doc, base_dir) -> Manifest:
    base = Path(base_dir)
    if isinstance(doc, list):
        doc = {"mixtures": doc}
    if not isinstance(doc, dict) or not isinstance(doc.get("mixtures"), list):
        raise ManifestError("manifest must be an object with a 'mixtures' list")
    entries = []
    seen = set()
    for n, raw in enumerate(doc["mixtures"]):
        if not isinstance(raw, dict) or "id" not in raw or "mixture" not in raw:
            raise ManifestError(f"mixture #{n} needs at least 'id' and 'mixture'")
        entry_id = str(raw["id"])
        if entry_id in seen:
            raise ManifestError(f"duplicate mixture id {entry_id!r}")
        seen.add(entry_id)
        expected = raw.get("expected_metric_db")
        entries.append(MixtureEntry(
            id=entry_id,
            mixture_path=base / raw["mixture"],
            references=_sources(raw.get("references", []), base, f"{entry_id}.references"),
            estimates=_sources(raw.get("estimates", []), base, f"{entry_id}.estimates"),
            ref_channel_index=int(raw.get("ref_channel_index", 0)),
            subset_tag=raw.get("subset"),
            expected_metric_db=None if expected is None else float(expected),
        ))
    vocab = doc.get("vocabulary")
    return Manifest(tuple(entries), None if vocab is None else tuple(vocab))


def load_manifest(path) -> Manifest:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, ValueError) as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from None
    m = parse_manifest(doc, path.parent)
    return Manifest(m.entries, m.vocabulary, path)


def load_entry(entry: MixtureEntry):
    """Read the mixture reference channel, references and estimates of one entry."""
    mixture = load_channel(entry.mixture_path, entry.ref_channel_index)
    refs = LabeledSources((label, load_channel(p)) for label, p in entry.references)
    ests = LabeledSources((label, load_channel(p)) for label, p in entry.estimates)
    waves = [mixture, *refs.waveforms, *ests.waveforms]
    check_compatible(*waves)
    return mixture, refs, ests


# -- evaluation ------------------------------------------------------------

def _base_row(entry: MixtureEntry) -> dict:
    row = {"type": "mixture", "id": entry.id, "subset": entry.subset_tag}
    if entry.expected_metric_db is not None:
        row["expected_metric_db"] = entry.expected_metric_db
    return row


def evaluate_entry(entry: MixtureEntry, cfg: MetricConfig = DEFAULT_CONFIG,
                   vocabulary: Optional[Sequence[str]] = None, k_max: int = K_MAX) -> dict:
    """Evaluate one manifest entry; errors become an error row instead of raising."""
    row = _base_row(entry)
    if not entry.references and not entry.estimates:
        row.update(status="skipped", reason="no references and no estimates")
        return row
    try:
        if not entry.references:
            raise EmptyReference("entry has estimates but no references")
        if len(entry.references) > k_max:
            raise ManifestError(f"{len(entry.references)} references exceed k_max={k_max}")
        if vocabulary is not None:
            check_vocabulary([x for x, _ in entry.references + entry.estimates], vocabulary)
        mixture, refs, ests = load_entry(entry)
        result = ca_pi_sdri(refs, ests, mixture, cfg)
    except (S5EvalError, ValueError, OSError) as exc:
        code = getattr(exc, "code", "io_error" if isinstance(exc, OSError) else "invalid_input")
        row.update(status="error", error={"code": code, "message": str(exc)})
        return row
    tp, fn, fp = result.counts
    row.update(
        status="ok",
        metric_db=result.metric_db,
        total_n=result.total_n,
        n_tp=tp, n_fn=fn, n_fp=fp,
        components=[{
            "label": c.label,
            "p_value": c.p_value,
            "n_total": c.n_total,
            "n_tp": c.counts[0], "n_fn": c.counts[1], "n_fp": c.counts[2],
            "pairs": [list(p) for p in c.assignment.pairs],
        } for c in result.components],
    )
    return row


@dataclass
class EvaluationReport:
    rows: list[dict]
    aggregates: list[dict]
    config: dict
    figures: list[Path] = field(default_factory=list)

    @property
    def overall_mean(self) -> Optional[float]:
        return self.aggregates[0]["mean_metric_db"] if self.aggregates else None


def aggregate(rows: Sequence[dict]) -> list[dict]:
    """Unweighted mean over scored mixtures, overall then per subset tag."""
    scored = [r for r in rows if r.get("status") == "ok"]

    def summary(subset, group):
        values = [r["metric_db"] for r in group]
        return {
            "type": "aggregate",
            "subset": subset,
            "n_mixtures": len(values),
            "mean_metric_db": math.fsum(values) / len(values) if values else None,
        }

    out = [summary(None, scored)]
    for tag in sorted({r["subset"] for r in scored if r["subset"] is not None}):
        out.append(summary(tag, [r for r in scored if r["subset"] == tag]))
    errors = sum(r.get("status") == "error" for r in rows)
    skipped = sum(r.get("status") == "skipped" for r in rows)
    out[0].update(n_errors=errors, n_skipped=skipped)
    return out


def config_record(cfg: MetricConfig) -> dict:
    return {
        "type": "config",
        "penalty_fn": cfg.penalty_fn,
        "penalty_fp": cfg.penalty_fp,
        "sdr_cap_db": cfg.guards.sdr_cap_db,
        "energy_floor": cfg.guards.energy_floor,
        "penalty_hook": cfg.penalty_hook is not None,
        "version": __version__,
    }


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def _evaluate_star(args):
    return evaluate_entry(*args)


def evaluate_manifest(manifest: Manifest, cfg: MetricConfig = DEFAULT_CONFIG,
                      workers: Optional[int] = None, vocabulary: Optional[Sequence[str]] = None,
                      k_max: int = K_MAX) -> EvaluationReport:
    """Evaluate every entry independently; rows come back sorted by entry id."""
    if workers is None:
        workers = default_workers()
    vocab = vocabulary if vocabulary is not None else manifest.vocabulary
    jobs = [(e, cfg, vocab, k_max) for e in manifest.entries]
    if workers <= 1 or len(jobs) <= 1:
        rows = [_evaluate_star(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_evaluate_star, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    rows.sort(key=lambda r: r["id"])
    return EvaluationReport(rows, aggregate(rows), config_record(cfg))


# -- report output ---------------------------------------------------------

CSV_COLUMNS = ("id", "subset", "status", "metric_db", "expected_metric_db", "total_n",
               "n_tp", "n_fn", "n_fp", "assignments", "error_code", "error_message")


def report_json_lines(report: EvaluationReport) -> str:
    lines = [json.dumps(report.config, sort_keys=True)]
    lines += [json.dumps(r, sort_keys=True) for r in report.rows]
    lines += [json.dumps(a, sort_keys=True) for a in report.aggregates]
    return "\n".join(lines) + "\n"


def _assignments_cell(row: dict) -> str:
    parts = []
    for c in row.get("components", []):
        pairs = ",".join(f"{e}->{r}" for e, r in c["pairs"])
        parts.append(f"{c['label']}:{pairs}")
    return ";".join(parts)


def report_csv(report: EvaluationReport) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for r in report.rows:
        err = r.get("error", {})
        writer.writerow({
            "id": r["id"],
            "subset": r.get("subset") or "",
            "status": r["status"],
            "metric_db": repr(r["metric_db"]) if "metric_db" in r else "",
            "expected_metric_db": repr(r["expected_metric_db"]) if "expected_metric_db" in r else "",
            "total_n": r.get("total_n", ""),
            "n_tp": r.get("n_tp", ""), "n_fn": r.get("n_fn", ""), "n_fp": r.get("n_fp", ""),
            "assignments": _assignments_cell(r),
            "error_code": err.get("code", ""),
            "error_message": err.get("message", ""),
        })
    for a in report.aggregates:
        writer.writerow({
            "id": "__overall__" if a["subset"] is None else f"__subset__:{a['subset']}",
            "subset": a["subset"] or "",
            "status": "aggregate",
            "metric_db": "" if a["mean_metric_db"] is None else repr(a["mean_metric_db"]),
            "total_n": a["n_mixtures"],
        })
    return buf.getvalue()


def write_report(report: EvaluationReport, path, fmt: str = "json-lines") -> Path:
    """Write the report body; CSV output also gets a ``.summary.json`` sidecar with the config."""
    path = Path(path)
    if fmt == "json-lines":
        path.write_text(report_json_lines(report))
    elif fmt == "csv":
        path.write_text(report_csv(report))
        sidecar = path.with_name(path.name + ".summary.json")
        sidecar.write_text(json.dumps({"config": report.config, "aggregates": report.aggregates},
                                      indent=2, sort_keys=True) + "\n")
    else:
        raise ValueError(f"unknown report format {fmt!r}; choose from {REPORT_FORMATS}")
    return path
