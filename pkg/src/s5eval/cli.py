"""Command-line interface: ``s5eval {evaluate,synth,losses,selftest}``.

Fatal errors exit with status 1 and print one JSON object on stderr::

    {"error": "<code>", "message": "..."}

Usage errors (unknown flags, bad values) exit with status 2.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

from . import __version__
from .core import NumericGuards
from .errors import S5EvalError
from .grouping import DCASE2025_VOCABULARY, K_MAX


def _error(code: str, message: str, status: int = 1) -> int:
    print(json.dumps({"error": code, "message": message}), file=sys.stderr)
    return status


def _workers_default():
    from .evaluation import default_workers

    return default_workers()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="s5eval", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    ev = sub.add_parser("evaluate", help="score every mixture in a manifest with CA-PI-SDRi")
    ev.add_argument("--manifest", required=True, help="manifest JSON file")
    ev.add_argument("--output", required=True, help="report path")
    ev.add_argument("--format", choices=("json-lines", "csv"), default="json-lines")
    ev.add_argument("--penalty-fn", type=float, default=0.0, help="dB per missed source (default 0)")
    ev.add_argument("--penalty-fp", type=float, default=0.0, help="dB per spurious source (default 0)")
    ev.add_argument("--sdr-cap", type=float, default=60.0, help="upper bound on SDR in dB (default 60)")
    ev.add_argument("--workers", type=int, default=None,
                    help="worker processes (default: $S5EVAL_WORKERS or 1)")
    ev.add_argument("--vocabulary", choices=("manifest", "dcase2025", "none"), default="manifest",
                    help="label validation list (default: the manifest's own, if any)")
    ev.add_argument("--k-max", type=int, default=K_MAX)
    ev.add_argument("--no-figures", action="store_true", help="skip the PNG figures")

    sy = sub.add_parser("synth", help="write synthetic scenes with oracle estimates and a manifest")
    sy.add_argument("--out-dir", required=True)
    sy.add_argument("--count", type=int, default=12)
    sy.add_argument("--seed", type=int, default=0)
    sy.add_argument("--duration", type=float, default=10.0, help="seconds (default 10)")
    sy.add_argument("--sample-rate", type=int, default=32000)
    sy.add_argument("--k-max", type=int, default=K_MAX)
    sy.add_argument("--dup-prob", type=float, default=0.4, help="chance of a repeated label")
    sy.add_argument("--max-interference", type=int, default=2)
    sy.add_argument("--sdri-min", type=float, default=0.0)
    sy.add_argument("--sdri-max", type=float, default=20.0)
    sy.add_argument("--fn-prob", type=float, default=0.0, help="chance of dropping one estimate")
    sy.add_argument("--fp-prob", type=float, default=0.0, help="chance of adding a wrong-label estimate")
    sy.add_argument("--no-noise", action="store_true")
    sy.add_argument("--wav-format", choices=("float64", "float32", "pcm16", "pcm24"), default="float64")

    lo = sub.add_parser("losses", help="the three SDR loss variants for one manifest entry")
    lo.add_argument("--manifest", required=True)
    lo.add_argument("--id", required=True, help="mixture id")
    lo.add_argument("--mapping-seed", type=int, default=None,
                    help="seed for the random same-label mapping of CA-SDR (default: order as given)")
    lo.add_argument("--sdr-cap", type=float, default=60.0)

    st = sub.add_parser("selftest", help="run reduced property suites; exit 0 when all pass")
    st.add_argument("--scale", type=float, default=1.0, help="multiply the default case counts")
    return parser


def cmd_evaluate(args) -> int:
    from .evaluation import Manifest, evaluate_manifest, load_manifest, write_report
    from .figures import render_report_figures
    from .metrics import MetricConfig

    cfg = MetricConfig(args.penalty_fn, args.penalty_fp, NumericGuards(sdr_cap_db=args.sdr_cap))
    manifest = load_manifest(args.manifest)
    vocab = DCASE2025_VOCABULARY if args.vocabulary == "dcase2025" else None
    if args.vocabulary == "none":
        manifest = Manifest(manifest.entries, None, manifest.path)
    workers = args.workers if args.workers is not None else _workers_default()
    start = time.perf_counter()
    report = evaluate_manifest(manifest, cfg, workers=workers, vocabulary=vocab, k_max=args.k_max)
    path = write_report(report, args.output, args.format)
    if not args.no_figures:
        report.figures = render_report_figures(report, path)
    overall = report.aggregates[0]
    mean = overall["mean_metric_db"]
    print(f"{len(report.rows)} mixtures, {overall['n_errors']} errors, {overall['n_skipped']} skipped; "
          f"mean CA-PI-SDRi {'n/a' if mean is None else f'{mean:.3f} dB'} "
          f"({time.perf_counter() - start:.1f}s) -> {path}", file=sys.stderr)
    return 0


def cmd_synth(args) -> int:
    from .synth import DatasetSpec, write_dataset

    ds = DatasetSpec(
        count=args.count, seed=args.seed, duration_s=args.duration, sample_rate_hz=args.sample_rate,
        k_max=args.k_max, dup_probability=args.dup_prob, max_interference=args.max_interference,
        sdri_range_db=(args.sdri_min, args.sdri_max), fn_probability=args.fn_prob,
        fp_probability=args.fp_prob, add_noise=not args.no_noise,
    )
    path = write_dataset(args.out_dir, ds, args.wav_format)
    print(path)
    return 0


def cmd_losses(args) -> int:
    from .evaluation import load_entry, load_manifest
    from .losses import ca_pi_sdr_loss, ca_sdr_loss, pi_sdr_loss

    manifest = load_manifest(args.manifest)
    try:
        entry = manifest.get(args.id)
    except KeyError:
        return _error("unknown_id", f"no mixture with id {args.id!r} in {args.manifest}")
    _, refs, ests = load_entry(entry)
    guards = NumericGuards(sdr_cap_db=args.sdr_cap)
    out = {"id": entry.id}
    for name, result in (
        ("ca_pi_sdr", ca_pi_sdr_loss(ests, refs, guards)),
        ("ca_sdr", ca_sdr_loss(ests, refs, args.mapping_seed, guards)),
        ("pi_sdr", pi_sdr_loss(ests, refs, guards)),
    ):
        out[name] = {
            "loss": result.loss_value,
            "permutation": list(result.chosen_permutation),
            "per_pair_sdr": list(result.per_pair_sdr),
        }
    print(json.dumps(out, sort_keys=True))
    return 0


def cmd_selftest(args) -> int:
    from .checks import run_selftest

    results = run_selftest(args.scale)
    for r in results:
        print(r.line())
    return 0 if all(r.passed for r in results) else 1


COMMANDS = {"evaluate": cmd_evaluate, "synth": cmd_synth, "losses": cmd_losses, "selftest": cmd_selftest}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except S5EvalError as exc:
        return _error(exc.code, str(exc))
    except (OSError, ValueError) as exc:
        return _error(type(exc).__name__, str(exc))


if __name__ == "__main__":
    sys.exit(main())
