"""Command-line entry points.

Subcommands: model-summary, split, train, eval, simulate, gradcheck.
Exit codes: 0 success, 1 runtime/data failure, 2 usage or config error.
Every command that takes --seed is bit-reproducible: rerunning with the
same arguments writes byte-identical output files (run metadata carries
no timestamps).
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import data as data_mod
from . import fogsim
from . import metrics as metrics_mod
from .nn import (
    VARIANTS,
    CheckpointError,
    build_model,
    evaluate,
    fit,
    format_summary,
    gradient_check,
    history_csv_lines,
    load_model,
    save_checkpoint,
    summarize_variant,
)

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


def _fail(message: str, code: int) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def cmd_model_summary(args) -> int:
    try:
        rows = summarize_variant(args.variant, input_hw=args.image_size)
    except ValueError as exc:
        return _fail(str(exc), EXIT_USAGE)
    print(format_summary(rows))
    return EXIT_OK


def cmd_split(args) -> int:
    input_dir = Path(args.input_dir)
    out_path = Path(args.out) if args.out else input_dir / "manifest.csv"
    try:
        records = data_mod.scan_class_directories(input_dir)
        manifest = data_mod.stratified_split(records, seed=args.seed)
    except (OSError, ValueError) as exc:
        return _fail(str(exc), EXIT_RUNTIME)

    # keep record paths resolvable relative to wherever the manifest lands
    prefix = Path(os.path.relpath(input_dir, out_path.parent)).as_posix()
    if prefix != ".":
        manifest.records = [replace(r, path=f"{prefix}/{r.path}") for r in manifest.records]
    out_path.parent.mkdir(parents=True, exist_ok=True)
    data_mod.save_manifest(manifest, out_path)
    print(data_mod.split_table(manifest))
    print(f"wrote {out_path}", file=sys.stderr)
    return EXIT_OK


def cmd_train(args) -> int:
    try:
        model = build_model(args.variant, seed=args.seed, input_hw=args.image_size)
    except ValueError as exc:
        return _fail(str(exc), EXIT_USAGE)

    try:
        manifest = data_mod.load_manifest(args.manifest)
        train_images, train_labels = data_mod.load_split_arrays(
            manifest, "train", hw=args.image_size)
        if manifest.select("val"):
            val_images, val_labels = data_mod.load_split_arrays(
                manifest, "val", hw=args.image_size)
            val_set = (val_images.array, val_labels)
        else:
            val_set = None
    except (OSError, ValueError) as exc:
        return _fail(str(exc), EXIT_RUNTIME)

    history = fit(model, (train_images.array, train_labels), val_set,
                  epochs=args.epochs, batch_size=args.batch_size, lr=args.lr,
                  early_stop_patience=args.patience, seed=args.seed)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_checkpoint(model, out / "checkpoint.fcnn")
    (out / "history.csv").write_text("\n".join(history_csv_lines(history)) + "\n",
                                     encoding="utf-8")
    fogsim.write_json({
        "command": "train",
        "manifest": str(args.manifest),
        "variant": args.variant,
        "epochs": args.epochs,
        "batch_size": args.batch_size,
        "lr": args.lr,
        "seed": args.seed,
        "patience": args.patience,
        "image_size": args.image_size,
        "out": str(out),
    }, out / "run.json")

    if history:
        last = history[-1]
        print(f"epoch {last.epoch}: train_loss {last.train_loss:.6f} "
              f"train_accuracy {last.train_accuracy:.4f} "
              f"val_loss {last.val_loss:.6f} val_accuracy {last.val_accuracy:.4f}")
    else:
        print("epochs 0: saved initialized model, empty history")
    print(f"wrote {out / 'checkpoint.fcnn'}, {out / 'history.csv'}, {out / 'run.json'}",
          file=sys.stderr)
    return EXIT_OK


def cmd_eval(args) -> int:
    try:
        model = load_model(args.checkpoint)
    except (CheckpointError, OSError) as exc:
        return _fail(str(exc), EXIT_RUNTIME)
    try:
        manifest = data_mod.load_manifest(args.manifest)
        images, labels = data_mod.load_split_arrays(manifest, args.split,
                                                    hw=model.input_hw)
    except (OSError, ValueError) as exc:
        return _fail(str(exc), EXIT_RUNTIME)

    _, report = evaluate(model, images.array, labels)
    lines = [metrics_mod.CSV_HEADER, metrics_mod.csv_row(args.split, report)]
    print("\n".join(lines))
    if args.out:
        Path(args.out).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_simulate(args) -> int:
    try:
        topology = fogsim.load_topology(args.topology)
        workload = fogsim.load_workload(args.workload)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        if args.policy == "both":
            comparison = fogsim.compare_policies(topology, workload, seed=args.seed)
            reports = [comparison.fog, comparison.cloud]
            fogsim.write_json(comparison.summary_dict(), out / "comparison.json")
        else:
            reports = [fogsim.run_simulation(topology, args.policy, workload,
                                             seed=args.seed)]
        for report in reports:
            fogsim.write_report_csv(report, out / f"report_{report.policy}.csv")
            fogsim.write_json(report.summary_dict(), out / f"summary_{report.policy}.json")
    except (fogsim.TopologyConfigError, ValueError) as exc:
        return _fail(str(exc), EXIT_USAGE)
    except OSError as exc:
        return _fail(str(exc), EXIT_RUNTIME)

    for report in reports:
        print(f"{report.policy}: {len(report.outcomes)} requests, "
              f"mean latency {report.mean_latency_s:.6f} s, "
              f"cloud bytes {report.cloud_bytes}")
    if args.policy == "both":
        delta = comparison.delta_dict()
        print(f"fog - cloud: mean latency {delta['mean_latency_s']:+.6f} s, "
              f"cloud bytes {delta['cloud_bytes']:+d}")
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    result = gradient_check(seed=args.seed, corrupt_param=args.corrupt_param)
    for name in sorted(result.max_rel_error):
        err = result.max_rel_error[name]
        verdict = "ok" if err < result.threshold else "FAIL"
        print(f"{name:<28} max rel error {err:.3e}  {verdict}")
    if result.passed:
        print(f"gradient check passed (worst {result.worst:.3e} < {result.threshold:g})")
        return EXIT_OK
    print(f"gradient check FAILED (worst {result.worst:.3e} >= {result.threshold:g})")
    return EXIT_RUNTIME


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fogxray",
        description="Chest X-ray CNN training and fog/cloud placement simulation.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("model-summary", help="print the per-layer parameter table")
    p.add_argument("variant", choices=VARIANTS)
    p.add_argument("--image-size", type=int, default=data_mod.DEFAULT_IMAGE_HW)
    p.set_defaults(func=cmd_model_summary)

    p = sub.add_parser("split", help="build a stratified train/val/test manifest")
    p.add_argument("input_dir", help="directory with normal/ and covid/ PNG subdirectories")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="manifest path (default <input_dir>/manifest.csv)")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train", help="train a variant from a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--variant", choices=VARIANTS, default="three_block")
    p.add_argument("--epochs", type=int, default=400)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--lr", type=float, default=0.001)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--patience", type=int, default=20,
                   help="early-stop patience on val loss; <= 0 disables")
    p.add_argument("--image-size", type=int, default=data_mod.DEFAULT_IMAGE_HW)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on one split")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--split", choices=data_mod.SPLITS, default="test")
    p.add_argument("--out", help="also write the metrics CSV here")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("simulate", help="run the fog/cloud placement simulation")
    p.add_argument("--topology", required=True, help="topology JSON")
    p.add_argument("--workload", required=True, help="workload CSV")
    p.add_argument("--policy", choices=("fog", "cloud", "both"), default="both")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("gradcheck", help="finite-difference check of the backward pass")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--corrupt-param", default=None, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_gradcheck)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    if argv[:2] == ["model", "summary"]:
        argv = ["model-summary"] + argv[2:]
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
