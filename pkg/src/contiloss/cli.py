"""Command-line interface: ``mix``, ``score``, ``grad-check`` and ``demo``."""

import argparse
import csv
import io
import json
import logging
import os
import sys

import numpy as np

from . import demo as demo_mod
from .gradcheck import DEFAULT_TOLERANCE, run_suite
from .metrics import TranscriptPair, edit_distance_rate, sdr_metric, si_sdr_metric, suppression_mae
from .mixsim import (
    INTERFERENCE_SNR_RANGE,
    NOISE_SNR_RANGE,
    MixSpec,
    make_mixture,
    make_rng,
)
from .signal import DEFAULT_RESOLUTIONS, SUPPRESSION_CONFIG, StftConfig
from .wavio import ENCODINGS, load_wav, save_wav

log = logging.getLogger("contiloss")

MIX_COLUMNS = [
    "row", "target", "interferences", "noise", "interference_snr_db",
    "noise_snr_db", "seed", "output", "status", "error",
]
SCORE_COLUMNS = [
    "row", "reference", "estimate", "si_sdr", "sdr", "mae_over", "mae_under",
    "wer", "cer", "status", "error",
]
CURVE_COLUMNS = ["step", "si_sdr_only", "hybrid"]
METRICS = ("si_sdr", "sdr", "mae", "wer", "cer")


def _int_list(text):
    return [int(v) for v in text.split(",") if v.strip()]


def _resolutions(args):
    fft, hops, wins = args.fft_sizes, args.hops, args.wins
    if fft is None and hops is None and wins is None:
        return None
    defaults = DEFAULT_RESOLUTIONS
    fft = fft or [c.fft_size for c in defaults]
    hops = hops or [c.hop for c in defaults]
    wins = wins or [c.win_length for c in defaults]
    if not len(fft) == len(hops) == len(wins):
        raise ValueError("--fft-sizes, --hops and --wins must have the same length")
    return tuple(StftConfig(f, h, w) for f, h, w in zip(fft, hops, wins))


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _write_table(rows, columns, out, fmt):
    if fmt == "json":
        text = json.dumps(rows, indent=2) + "\n"
    else:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        text = buf.getvalue()
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="") as fh:
            fh.write(text)


def _fmt(value):
    if value is None or value == "":
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


# ---------------------------------------------------------------------------
# mix


def _split(field):
    return [v.strip() for v in (field or "").split(";") if v.strip()]


def _row_seed(global_seed, index):
    return int(np.random.SeedSequence([global_seed, index]).generate_state(1)[0])


def _resolve(base, path):
    return path if os.path.isabs(path) else os.path.join(base, path)


def _mix_row(index, row, base, out_dir, global_seed, encoding):
    seed = int(row["seed"]) if (row.get("seed") or "").strip() else _row_seed(global_seed, index)
    rng = make_rng(seed)
    target = load_wav(_resolve(base, row["target"].strip()))
    interf_paths = _split(row.get("interferences"))
    interferences = [load_wav(_resolve(base, p)) for p in interf_paths]
    snrs = [float(v) for v in _split(row.get("interference_snr_db"))]
    if not snrs:
        snrs = [float(rng.uniform(*INTERFERENCE_SNR_RANGE)) for _ in interferences]
    noise_path = (row.get("noise") or "").strip()
    noise = load_wav(_resolve(base, noise_path)) if noise_path else None
    noise_snr = None
    if noise is not None:
        text = (row.get("noise_snr_db") or "").strip()
        noise_snr = float(text) if text else float(rng.uniform(*NOISE_SNR_RANGE))

    spec = MixSpec(target, interferences, snrs, noise, noise_snr, seed)
    result = make_mixture(spec)
    output = (row.get("output") or "").strip() or f"mix_{index:05d}.wav"
    save_wav(result.mixture, os.path.join(out_dir, output), encoding)
    return {
        "interferences": ";".join(interf_paths),
        "noise": noise_path,
        "interference_snr_db": ";".join(repr(s) for s in snrs),
        "noise_snr_db": _fmt(noise_snr),
        "seed": seed,
        "output": output,
    }


def cmd_mix(args):
    with open(args.manifest, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "target" not in reader.fieldnames:
            raise ValueError(f"{args.manifest}: manifest needs at least a 'target' column")
        rows = list(reader)
    base = os.path.dirname(os.path.abspath(args.manifest))
    os.makedirs(args.out, exist_ok=True)

    records, failures = [], 0
    for index, row in enumerate(rows):
        record = {key: "" for key in MIX_COLUMNS}
        record.update(row=index, target=(row.get("target") or "").strip())
        try:
            record.update(_mix_row(index, row, base, args.out, args.seed, args.encoding))
            record["status"] = "ok"
        except (OSError, ValueError) as exc:
            failures += 1
            record.update(status="error", error=str(exc))
            log.error("row %d: %s", index, exc)
        records.append(record)
    _write_table(records, MIX_COLUMNS, os.path.join(args.out, "provenance.csv"), "csv")
    return 1 if failures else 0


# ---------------------------------------------------------------------------
# score


def _score_row(index, fields, base, metrics, config):
    ref_path, est_path = fields[0], fields[1]
    record = {"row": index, "reference": ref_path, "estimate": est_path}
    ref = load_wav(_resolve(base, ref_path))
    est = load_wav(_resolve(base, est_path))
    if len(ref) != len(est):
        raise ValueError(f"length mismatch: reference {len(ref)} vs estimate {len(est)}")
    if "si_sdr" in metrics:
        record["si_sdr"] = si_sdr_metric(est, ref)
    if "sdr" in metrics:
        record["sdr"] = sdr_metric(est, ref)
    if "mae" in metrics:
        supp = suppression_mae(est, ref, config)
        record["mae_over"] = supp.mae_over
        record["mae_under"] = supp.mae_under
    if len(fields) >= 4:
        if "wer" in metrics:
            pair = TranscriptPair.from_text(fields[2], fields[3], "word")
            record["wer"] = edit_distance_rate(pair).rate
        if "cer" in metrics:
            pair = TranscriptPair.from_text(fields[2], fields[3], "character")
            record["cer"] = edit_distance_rate(pair).rate
    return record


def cmd_score(args):
    metrics = set(args.metrics.split(","))
    unknown = metrics - set(METRICS)
    if unknown:
        raise ValueError(f"unknown metrics {sorted(unknown)}; choose from {METRICS}")
    resolutions = _resolutions(args)
    config = resolutions[0] if resolutions else SUPPRESSION_CONFIG
    base = os.path.dirname(os.path.abspath(args.manifest))
    with open(args.manifest) as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]

    rows, failures = [], 0
    for index, line in enumerate(lines):
        fields = line.split("\t")
        try:
            if len(fields) < 2:
                raise ValueError("expected at least two tab-separated WAV paths")
            record = _score_row(index, fields, base, metrics, config)
            record["status"] = "ok"
        except (OSError, ValueError) as exc:
            failures += 1
            record = {"row": index, "reference": fields[0],
                      "estimate": fields[1] if len(fields) > 1 else "",
                      "status": "error", "error": str(exc)}
            log.error("row %d: %s", index, exc)
        rows.append(record)

    if rows:
        summary = {"row": "mean", "status": "summary"}
        for key in ("si_sdr", "sdr", "mae_over", "mae_under", "wer", "cer"):
            values = [r[key] for r in rows if r.get(key) not in (None, "")]
            if values:
                summary[key] = float(np.mean(values))
        rows.append(summary)

    if args.format == "json":
        _write_table(rows, SCORE_COLUMNS, args.out, "json")
    else:
        table = [{c: _fmt(r.get(c)) for c in SCORE_COLUMNS} for r in rows]
        _write_table(table, SCORE_COLUMNS, args.out, "csv")
    return 1 if failures else 0


# ---------------------------------------------------------------------------
# grad-check


def cmd_grad_check(args):
    results = run_suite(
        seed=args.seed,
        length=args.length,
        n_coords=args.coords,
        tolerance=args.tolerance,
        resolutions=_resolutions(args),
    )
    rows = [
        {"check": r.name, "max_rel_error": r.max_rel_error, "tolerance": r.tolerance,
         "status": "pass" if r.passed else "FAIL"}
        for r in results
    ]
    if args.format == "json":
        _write_table(rows, None, args.out, "json")
    else:
        for r in rows:
            print(f"{r['check']:<40s} {r['max_rel_error']:.3e}  {r['status']}")
        if args.out not in (None, "-"):
            _write_table(rows, ["check", "max_rel_error", "tolerance", "status"], args.out, "csv")
    return 0 if all(r.passed for r in results) else 1


# ---------------------------------------------------------------------------
# demo


def _demo_scenario(args):
    if args.target is None and args.interference is None:
        return demo_mod.builtin_scenario(seed=args.seed)
    if args.target is None or args.interference is None:
        raise ValueError("--target and --interference must be given together")
    target = load_wav(args.target)
    interference = load_wav(args.interference)
    if len(target) != len(interference):
        raise ValueError(
            f"length mismatch: target {len(target)} vs interference {len(interference)}"
        )
    return MixSpec(target, [interference], [args.snr], seed=args.seed,
                   interference_ids=(os.path.basename(args.interference),))


def cmd_demo(args):
    scenario = _demo_scenario(args)
    report = demo_mod.run_ab_experiment(
        scenario, steps=args.steps, learning_rate=args.lr, seed=args.seed, gamma=args.gamma
    )
    payload = report.to_dict()
    text = json.dumps(payload, indent=2) + "\n"
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.out, "w") as fh:
            fh.write(text)
    if args.curves:
        arms = report.arms
        rows = [
            {"step": i, "si_sdr_only": repr(a), "hybrid": repr(b)}
            for i, (a, b) in enumerate(
                zip(arms["si_sdr_only"].loss_curve, arms["hybrid"].loss_curve)
            )
        ]
        _write_table(rows, CURVE_COLUMNS, args.curves, "csv")
    return 0


# ---------------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(prog="contiloss", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def stft_flags(p):
        p.add_argument("--fft-sizes", type=_int_list, default=None)
        p.add_argument("--hops", type=_int_list, default=None)
        p.add_argument("--wins", type=_int_list, default=None)

    p = sub.add_parser("mix", help="simulate mixtures from a CSV manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--encoding", choices=ENCODINGS, default="float32")
    p.set_defaults(func=cmd_mix)

    p = sub.add_parser("score", help="score estimates against references")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--metrics", default=",".join(METRICS))
    stft_flags(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("grad-check", help="finite-difference gradient checks")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--length", type=_positive_int, default=4096)
    p.add_argument("--coords", type=_positive_int, default=20)
    p.add_argument("--tolerance", type=float, default=DEFAULT_TOLERANCE)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", default=None)
    stft_flags(p)
    p.set_defaults(func=cmd_grad_check)

    p = sub.add_parser("demo", help="SI-SDR vs hybrid mask-optimisation A/B run")
    p.add_argument("--target", default=None, help="target WAV (default: built-in scenario)")
    p.add_argument("--interference", default=None)
    p.add_argument("--snr", type=float, default=0.0, help="target-to-interference SNR (dB)")
    p.add_argument("--steps", type=_positive_int, default=demo_mod.DEMO_STEPS)
    p.add_argument("--lr", type=float, default=demo_mod.DEFAULT_LEARNING_RATE)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="JSON report path (default: stdout)")
    p.add_argument("--curves", default=None, help="optional CSV of per-step losses")
    p.set_defaults(func=cmd_demo)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        log.error("%s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
