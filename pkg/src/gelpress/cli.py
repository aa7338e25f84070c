"""Command-line entry point.

Verbs: gen-data, train, eval, predict, ingest, plot. Exit codes: 0 success,
2 usage, 3 data error, 4 numerical divergence. Failures print one
machine-parseable line: ``ERROR <code>: <message>``.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .dataset import (
    SequenceRecord,
    _numeric_frame_sort,
    build_dataset,
    ingest_dataset,
    intensity_from_frames,
    load_dataset,
    write_dataset,
)
from .errors import GelpressError, ManifestError, TrainingDiverged
from .net import kernels
from .net.checkpoint import load_checkpoint, save_checkpoint
from .net.model import HardnessNet, predict_hardness
from .pipeline import clip_from_sequence
from .traineval import MODES, evaluate, make_splits, train, write_loss_csv


def _common(parser: argparse.ArgumentParser):
    parser.add_argument("--config", help="config file overriding the packaged defaults")
    parser.add_argument("--seed", type=int, help="override the relevant config seed")


def _load(args) -> "configparser.ConfigParser":
    cfg = cfgmod.load_config(args.config)
    kernels.use_backend(cfgmod.kernel_backend(cfg))
    return cfg


def cmd_gen_data(args) -> int:
    cfg = _load(args)
    if args.seed is not None:
        cfg.set("dataset", "seed", str(args.seed))
    plan = cfgmod.dataset_plan(cfg)
    scene = cfgmod.scene(cfg)
    ranges = cfgmod.press_ranges(cfg)
    total = plan.n_sequences()
    print(f"generating {total} sequences into {args.out}")

    def progress(done, total):
        if done % 100 == 0 or done == total:
            print(f"  {done}/{total}")

    records = build_dataset(plan, scene, ranges, progress=progress if total >= 100 else None)
    manifest_path = write_dataset(records, args.out)
    print(f"wrote {manifest_path}")
    return 0


def cmd_train(args) -> int:
    cfg = _load(args)
    if args.seed is not None:
        cfg.set("train", "seed", str(args.seed))
    records = load_dataset(args.data)
    plan = cfgmod.dataset_plan(cfg)
    train_split, _ = make_splits(records, args.mode, plan)
    model = HardnessNet(cfgmod.net_config(cfg), seed=cfgmod.train_config(cfg).seed)
    losses = train(
        model,
        train_split,
        cfgmod.train_config(cfg),
        tau=cfgmod.tau(cfg),
        log_every=args.log_every,
    )
    save_checkpoint(model, args.out)
    print(f"wrote checkpoint {args.out} (final loss {losses[-1]:.5f})")
    if args.loss_csv:
        write_loss_csv(losses, args.loss_csv)
        print(f"wrote loss curve {args.loss_csv}")
    return 0


def cmd_eval(args) -> int:
    cfg = _load(args)
    records = load_dataset(args.data)
    plan = cfgmod.dataset_plan(cfg)
    _, test_split = make_splits(records, args.mode, plan)
    if args.group:
        test_split = [r for r in test_split if r.group == args.group]
    model = load_checkpoint(args.checkpoint)
    report = evaluate(model, test_split, tau=cfgmod.tau(cfg))
    report.to_csv(args.out)
    print(report.summary_line())
    if report.high_range:
        print(
            f"labels>=70: n={report.high_range['n']} rmse={report.high_range['rmse']:.4f} "
            f"mean_error={report.high_range['mean_error']:+.4f}"
        )
    if report.skipped:
        print(f"skipped {len(report.skipped)} sequences with no usable clip")
    print(f"wrote report {args.out}")
    return 0


def cmd_predict(args) -> int:
    cfg = _load(args)
    model = load_checkpoint(args.checkpoint)
    seq_dir = Path(args.sequence)
    from PIL import Image

    frame_paths = _numeric_frame_sort(
        [p for p in seq_dir.iterdir() if p.suffix.lower() in (".png", ".jpg", ".jpeg", ".bmp")]
    )
    if not frame_paths:
        raise ManifestError(f"{seq_dir}: no frames")
    frames = np.stack([np.asarray(Image.open(p).convert("RGB")) for p in frame_paths])
    frames_f = frames.astype(np.float64) / 255.0
    intensity = intensity_from_frames(frames)
    clip = clip_from_sequence(frames_f, intensity, cfgmod.tau(cfg))
    estimate = predict_hardness(model.forward_clips(clip.frames[None]))[0]
    indices = ",".join(str(i) for i in clip.source_indices)
    print(f"hardness_shore00={estimate:.2f} frames={indices}")
    return 0


def cmd_ingest(args) -> int:
    manifest = ingest_dataset(args.raw, args.labels)
    out = Path(args.out) if args.out else Path(args.raw) / "manifest.json"
    with open(out, "w") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=1)
    print(f"wrote {out} with {len(manifest['records'])} sequences")
    return 0


def cmd_plot(args) -> int:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    labels, preds = [], []
    try:
        with open(args.report) as fh:
            header = fh.readline()
            if header.strip() and not header.startswith("id,"):
                raise ManifestError(f"{args.report}: not an eval report CSV")
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                parts = line.split(",")
                if len(parts) != 5:
                    raise ManifestError(f"{args.report}: malformed row {line!r}")
                labels.append(float(parts[3]))
                preds.append(float(parts[4]))
    except (OSError, ValueError) as exc:
        raise ManifestError(f"{args.report}: {exc}") from exc

    fig, ax = plt.subplots(figsize=(5, 5))
    if labels:
        ax.scatter(labels, preds, s=12, alpha=0.6)
        lo, hi = min(labels + preds), max(labels + preds)
        ax.plot([lo, hi], [lo, hi], "k--", linewidth=1)
    ax.set_xlabel("ground-truth hardness (Shore 00)")
    ax.set_ylabel("predicted hardness (Shore 00)")
    ax.set_title("prediction vs truth")
    scatter_path = out_dir / "scatter.svg"
    fig.savefig(scatter_path)
    plt.close(fig)
    print(f"wrote {scatter_path}")

    if args.loss_csv:
        iters, losses = [], []
        with open(args.loss_csv) as fh:
            fh.readline()
            for line in fh:
                i, v = line.strip().split(",")
                iters.append(int(i))
                losses.append(float(v))
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.plot(iters, losses, linewidth=0.8)
        ax.set_xlabel("iteration")
        ax.set_ylabel("loss")
        ax.set_yscale("log")
        loss_path = out_dir / "loss.svg"
        fig.savefig(loss_path)
        plt.close(fig)
        print(f"wrote {loss_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gelpress",
        description="synthetic tactile press videos and hardness regression",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a synthetic dataset")
    _common(p)
    p.add_argument("--out", required=True, help="dataset root directory")
    p.set_defaults(fn=cmd_gen_data)

    p = sub.add_parser("train", help="train a hardness model")
    _common(p)
    p.add_argument("--data", required=True, help="dataset root")
    p.add_argument("--mode", choices=MODES, default="novel_hardness")
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--loss-csv", help="write the loss curve here")
    p.add_argument("--log-every", type=int, default=200)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a test split")
    _common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--mode", choices=MODES, default="novel_hardness")
    p.add_argument("--group", help="restrict the test split to one group tag")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", required=True, help="report CSV path")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("predict", help="predict hardness for one sequence directory")
    _common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--sequence", required=True, help="directory of numbered frames")
    p.set_defaults(fn=cmd_predict)

    p = sub.add_parser("ingest", help="build a manifest for external frame folders")
    _common(p)
    p.add_argument("--raw", required=True, help="directory of per-sequence subdirectories")
    p.add_argument("--labels", help="CSV mapping sequence id -> Shore 00")
    p.add_argument("--out", help="manifest path (default <raw>/manifest.json)")
    p.set_defaults(fn=cmd_ingest)

    p = sub.add_parser("plot", help="plot an eval report (and optional loss curve)")
    _common(p)
    p.add_argument("--report", required=True, help="eval report CSV")
    p.add_argument("--loss-csv", help="loss curve CSV")
    p.add_argument("--out", required=True, help="output directory for SVG files")
    p.set_defaults(fn=cmd_plot)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except TrainingDiverged as exc:
        print(f"ERROR {exc.code}: {exc}", file=sys.stderr)
        return 4
    except GelpressError as exc:
        print(f"ERROR {exc.code}: {exc}", file=sys.stderr)
        return 3
    except FileNotFoundError as exc:
        print(f"ERROR E_MISSING_FILE: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
