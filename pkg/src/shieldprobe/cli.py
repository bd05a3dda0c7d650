"""Command-line surface for the experiment harness.

Exit codes: 0 success, 1 usage error, 2 configuration error, 3 data or
file-format error, 4 pipeline error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import analysis, dsp, harness, traceio
from .configfile import ConfigError, parse_config
from .harness import PipelineError, derive_seed
from .synth import Modality, synth_trace_set

_MODALITY_FLAGS = {"em": Modality.EM, "bs": Modality.BACKSCATTER}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="shieldprobe",
                     description="Simulate and analyze side-channel leakage "
                                 "of a shielded device under passive EM and "
                                 "active backscatter probing.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="synthesize a labeled trace set")
    p.add_argument("--config", required=True)
    p.add_argument("--shield", required=True)
    p.add_argument("--modality", required=True, choices=sorted(_MODALITY_FLAGS))
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("features", help="rank informative frequency points")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--top-k", dest="top_k", type=int, default=64)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_features)

    p = sub.add_parser("train", help="train and evaluate a classifier on a trace set")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--split", type=float, default=0.7)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--report", required=True)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("ica", help="decompose a trace set into independent components")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--components", type=int, default=3)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_ica)

    p = sub.add_parser("reproduce", help="run the full shields x modalities comparison")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("markdown", "csv"), default="markdown")
    p.set_defaults(func=_cmd_reproduce)

    p = sub.add_parser("countermeasure", help="sweep impedance-randomization strength")
    p.add_argument("--config", required=True)
    p.add_argument("--strengths", default="0,0.25,0.5,0.75,1.0")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_countermeasure)
    return parser


def _find_shield(cfg, name: str) -> int:
    for i, shield in enumerate(cfg.shields):
        if shield.name == name:
            return i
    known = ", ".join(s.name for s in cfg.shields)
    raise ConfigError(f"unknown shield {name!r}; configured shields: {known}")


def _cmd_synth(args) -> int:
    cfg = parse_config(args.config)
    idx = _find_shield(cfg, args.shield)
    modality = _MODALITY_FLAGS[args.modality]
    seed = args.seed if args.seed is not None else harness.dataset_seed(cfg, idx, modality)
    acq = harness.acquisition_for(cfg, modality, seed)
    ts = synth_trace_set(acq, modality, cfg.shields[idx], cfg.device,
                         cfg.sources, cfg.probe, cfg.programs)
    n_bytes = traceio.write_trace_set(ts, args.out)
    print(f"wrote {ts.n_traces} x {ts.n_points} {args.modality} traces "
          f"({n_bytes} bytes) to {args.out}")
    return 0


def _cmd_features(args) -> int:
    ts = traceio.read_trace_set(args.in_path)
    x, _ = dsp.standardize(dsp.to_magnitude(ts))
    scores = analysis.score_frequencies(x, ts.labels)
    top = analysis.select_top_k(scores, min(args.top_k, ts.n_points))
    freqs = ts.frequencies()
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("rank,column_index,frequency_hz,score\n")
        for rank, col in enumerate(top):
            fh.write(f"{rank},{int(col)},{freqs[col]!r},{scores.scores[col]!r}\n")
    print(f"wrote top {len(top)} frequency scores to {args.out}")
    return 0


def _cmd_train(args) -> int:
    if not 0.0 < args.split < 1.0:
        raise UsageError("--split must lie in (0, 1)")
    ts = traceio.read_trace_set(args.in_path)
    split_seed = derive_seed(ts.seed, 1)
    train_idx, test_idx = harness.stratified_split(ts.labels, args.split, split_seed)
    report, fitted = harness.fit_and_evaluate(
        ts, train_idx, test_idx, reference_label=int(ts.labels.min()),
        top_k=64, variance_target=0.95, folds=args.folds,
        c_grid=None, svm_seed=derive_seed(ts.seed, 2))
    payload = {
        "input": str(args.in_path),
        "modality": ts.modality.name,
        "shield": ts.shield_name,
        "n_traces": int(ts.n_traces),
        "split_train_fraction": args.split,
        "folds": args.folds,
        "c_selected": fitted.svm.c_selected,
        "pca_components": fitted.pca.m,
        "validation_accuracy_pct": report.validation_accuracy_pct,
        "accuracy_pct": report.accuracy_pct,
        "precision_pct": report.precision_pct,
        "recall_pct": report.recall_pct,
        "specificity_pct": report.specificity_pct,
        "f1_pct": report.f1_pct,
        "confusion": report.confusion.tolist(),
    }
    with open(args.report, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    print(f"test accuracy {harness.format_pct(report.accuracy_pct)}% "
          f"(validation {harness.format_pct(report.validation_accuracy_pct)}%), "
          f"report at {args.report}")
    return 0


def _cmd_ica(args) -> int:
    ts = traceio.read_trace_set(args.in_path)
    x, _ = dsp.standardize(dsp.to_magnitude(ts))
    # reduce to the most informative columns first; full-width whitening on
    # thousands of frequency points is numerically and computationally wasteful
    scores = analysis.score_frequencies(x, ts.labels)
    keep = analysis.select_top_k(scores, min(64, ts.n_points))
    model = analysis.ica_fit(x[:, keep], args.components, seed=args.seed)
    sources = analysis.ica_transform(model, x[:, keep])
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("label," + ",".join(f"component_{i}" for i in range(args.components)) + "\n")
        for label, row in zip(ts.labels, sources):
            fh.write(str(int(label)) + "," + ",".join(repr(float(v)) for v in row) + "\n")
    state = "converged" if model.converged else f"not converged after {model.iterations_used} iterations"
    print(f"ica {state}; wrote {sources.shape[0]} rows to {args.out}")
    return 0


def _cmd_reproduce(args) -> int:
    cfg = parse_config(args.config)
    table = harness.reproduce_classification_table(cfg)
    n_bytes = harness.emit_report(table, args.format, args.out)
    print(f"wrote {len(table.rows)}-row comparison ({n_bytes} bytes) to {args.out}")
    return 0


def _cmd_countermeasure(args) -> int:
    cfg = parse_config(args.config)
    try:
        strengths = [float(tok) for tok in args.strengths.split(",") if tok.strip()]
    except ValueError as exc:
        raise UsageError(f"cannot parse --strengths: {exc}") from exc
    sweep = harness.countermeasure_sweep(cfg, strengths)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("strength,validation_accuracy_pct,accuracy_pct,precision_pct,"
                 "recall_pct,specificity_pct,f1_pct\n")
        for strength, report in sweep:
            fh.write(",".join([f"{strength:g}",
                               harness.format_pct(report.validation_accuracy_pct),
                               harness.format_pct(report.accuracy_pct),
                               harness.format_pct(report.precision_pct),
                               harness.format_pct(report.recall_pct),
                               harness.format_pct(report.specificity_pct),
                               harness.format_pct(report.f1_pct)]) + "\n")
    print(f"wrote {len(sweep)}-point countermeasure sweep to {args.out}")
    return 0


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (traceio.TraceIOError, FileNotFoundError, PermissionError, IsADirectoryError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except (PipelineError, ValueError) as exc:
        print(f"pipeline error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
