"""Command-line pipeline: synth, extract, train, eval, label-serve."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import pca as pca_mod
from . import svm as svm_mod
from .config import PipelineConfig, load_config, write_config
from .dataio import (
    LabelStore,
    LibsvmParseError,
    SparseSample,
    densify,
    list_frames,
    read_frame,
    read_libsvm,
    sparsify,
    write_frame,
    write_libsvm,
)
from .evaluation import confusion, report, save_figure, to_csv
from .features import (
    BehaviorLabel,
    FeatureKind,
    FeatureVector,
    RoiSpec,
    extract_canny_stack,
    extract_hog,
)
from .scene import SceneParams, Trajectory, generate_sequence
from .server import serve

MANIFEST_NAME = "manifest.txt"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lanecue",
        description="Lane-keep / lane-change behavior classification pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="render a synthetic labeled frame sequence")
    p_synth.add_argument("--out", required=True, help="output directory")
    p_synth.add_argument(
        "--plan",
        required=True,
        help="trajectory segments, e.g. 'Keep:50x4,LeftChange:64x8,Intersection:40'",
    )
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--width", type=int, default=640)
    p_synth.add_argument("--height", type=int, default=360)
    p_synth.add_argument("--lane-width", type=float, default=120.0)
    p_synth.add_argument("--marker-period", type=float, default=90.0)
    p_synth.add_argument("--noise-sigma", type=float, default=6.0)
    p_synth.add_argument("--config", help="base config to copy pipeline settings from")

    p_extract = sub.add_parser("extract", help="extract labeled features to a LibSVM file")
    p_extract.add_argument("--frames", required=True, help="frame directory (PNG files)")
    p_extract.add_argument("--labels", required=True, help="label store file")
    p_extract.add_argument("--out", required=True, help="output LibSVM file")
    p_extract.add_argument("--config", help="pipeline config file")
    p_extract.add_argument("--feature", choices=("hog", "canny"))

    p_train = sub.add_parser("train", help="train the decision cascade")
    p_train.add_argument("--train", required=True, dest="train_file", help="LibSVM training file")
    p_train.add_argument("--model-dir", required=True)
    p_train.add_argument("--config", help="pipeline config file")
    p_train.add_argument("--feature", choices=("hog", "canny"))
    p_train.add_argument("--kernel", choices=("linear", "rbf"))
    p_train.add_argument("--c", type=float)
    p_train.add_argument("--gamma", type=float)
    p_train.add_argument("--tol", type=float)
    p_train.add_argument("--pca", choices=("auto", "on", "off"))
    p_train.add_argument("--pca-ratio", type=float)

    p_eval = sub.add_parser("eval", help="score a test set against a trained cascade")
    p_eval.add_argument("--model-dir", required=True)
    p_eval.add_argument("--test", required=True, dest="test_file", help="LibSVM test file")
    p_eval.add_argument("--report-dir", help="write report.txt, confusion.csv and confusion.png")

    p_serve = sub.add_parser("label-serve", help="serve the frame labeling UI")
    p_serve.add_argument("--frames", required=True)
    p_serve.add_argument("--labels", required=True)
    p_serve.add_argument("--port", type=int, default=8765)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--config", help="pipeline config (ROI shown as UI overlay)")

    return parser


def _load_pipeline_config(path: str | None, args=None) -> PipelineConfig:
    cfg = load_config(path) if path else PipelineConfig()
    if args is None:
        return cfg
    updates = {}
    if getattr(args, "feature", None):
        updates["feature"] = args.feature
    if getattr(args, "kernel", None):
        updates["kernel"] = args.kernel
    if getattr(args, "c", None) is not None:
        updates["c"] = args.c
    if getattr(args, "gamma", None) is not None:
        updates["gamma"] = args.gamma
    if getattr(args, "tol", None) is not None:
        updates["tol"] = args.tol
    if getattr(args, "pca", None):
        updates["pca_mode"] = args.pca
    if getattr(args, "pca_ratio", None) is not None:
        updates["pca_ratio"] = args.pca_ratio
    if not updates:
        return cfg
    return replace(cfg, **updates)


def parse_plan(plan: str) -> list[tuple[Trajectory, int]]:
    """Parse 'Keep:50x4,LeftChange:64' into (trajectory, frames) segments."""
    segments = []
    for chunk in plan.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        name, _, count_s = chunk.partition(":")
        if not count_s:
            raise ValueError(f"plan segment {chunk!r} needs 'Name:frames'")
        repeats = 1
        if "x" in count_s:
            count_s, _, rep_s = count_s.partition("x")
            repeats = int(rep_s)
        frames = int(count_s)
        if frames < 1 or repeats < 1:
            raise ValueError(f"plan segment {chunk!r} must use positive counts")
        traj = Trajectory.from_name(name.strip())
        segments.extend([(traj, frames)] * repeats)
    if not segments:
        raise ValueError("plan is empty")
    return segments


def synth_roi(width: int, height: int) -> RoiSpec:
    """ROI placement for synthetic frames: 400x110 centered, near the bottom."""
    if width < 400 or height < 248:
        raise ValueError(f"synthetic frames must be at least 400x248, got {width}x{height}")
    return RoiSpec(
        rect=((width - 400) // 2, height - 130, 400, 110),
        layer_rows=(0, 30, 60, 100),
        layer_height=10,
    )


def cmd_synth(args) -> int:
    base_cfg = _load_pipeline_config(args.config)
    out = Path(args.out)
    frames_dir = out / "frames"
    frames_dir.mkdir(parents=True, exist_ok=True)
    labels_path = out / "labels.txt"
    if labels_path.exists():
        labels_path.unlink()

    params = SceneParams(
        width=args.width,
        height=args.height,
        lane_width=args.lane_width,
        marker_period=args.marker_period,
        noise_sigma=args.noise_sigma,
        seed=args.seed,
    )
    segments = parse_plan(args.plan)
    store = LabelStore(labels_path)
    index = 1
    t0 = 0
    for seg_no, (trajectory, n_frames) in enumerate(segments):
        seg_params = replace(params, seed=params.seed + seg_no)
        frames, labels, _ = generate_sequence(seg_params, trajectory, n_frames, t0=t0)
        for frame, label in zip(frames, labels):
            frame_id = f"frame_{index:06d}"
            write_frame(frame, frames_dir / f"{frame_id}.png")
            store.assign(frame_id, label, float(index))
            index += 1
        t0 += n_frames

    cfg = replace(
        base_cfg,
        roi=synth_roi(args.width, args.height),
        frames_dir=str(frames_dir),
        labels_file=str(labels_path),
    )
    write_config(cfg, out / "config.txt")
    print(f"wrote {index - 1} frames to {frames_dir}")
    print(f"labels: {labels_path}")
    print(f"config: {out / 'config.txt'}")
    return 0


def extract_one(cfg: PipelineConfig, frame, label):
    if cfg.feature == "canny":
        return extract_canny_stack(frame, cfg.roi, cfg.canny, label)
    return extract_hog(frame, cfg.roi, cfg.cell, cfg.bins, label)


def cmd_extract(args) -> int:
    cfg = _load_pipeline_config(args.config, args)
    frame_ids = list_frames(args.frames)
    labels = LabelStore(args.labels).labels()
    samples = []
    skipped = 0
    for frame_id in frame_ids:
        label = labels.get(frame_id)
        if label is None:
            skipped += 1
            continue
        frame = read_frame(Path(args.frames) / f"{frame_id}.png")
        fv = extract_one(cfg, frame, label)
        samples.append(sparsify(fv.values, label.code))
    write_libsvm(samples, args.out)
    if skipped:
        print(f"warning: {skipped} frames without labels were skipped", file=sys.stderr)
    print(f"extracted {len(samples)} {cfg.feature} samples (dim {cfg.feature_dim}) to {args.out}")
    return 0


def _dense_matrix(samples: list[SparseSample], dim: int):
    """Dense features plus behavior labels; label codes must map."""
    if not samples:
        raise ValueError("dataset is empty")
    over = max(s.max_index for s in samples)
    if over > dim:
        raise ValueError(
            f"feature dimension mismatch: expected {dim}, data has index {over}"
        )
    vectors = []
    for s in samples:
        fv = densify(s, dim)
        if fv.label is None:
            raise ValueError(f"label code {s.label} is not a behavior label (0..3)")
        vectors.append(fv)
    x = np.stack([fv.values for fv in vectors])
    return x, vectors


def cmd_train(args) -> int:
    cfg = _load_pipeline_config(args.config, args)
    samples = read_libsvm(args.train_file)
    dim = cfg.feature_dim
    x, vectors = _dense_matrix(samples, dim)

    model_dir = Path(args.model_dir)
    model_dir.mkdir(parents=True, exist_ok=True)

    pca_file = None
    if cfg.pca_enabled:
        model = pca_mod.fit(x, cfg.pca_ratio)
        pca_file = "pca.txt"
        pca_mod.save_model(model, model_dir / pca_file)
        x = pca_mod.project(model, x)
        print(f"pca: {dim} -> {model.output_dim} dims (r={cfg.pca_ratio})")

    gamma = cfg.gamma if cfg.gamma is not None else 1.0 / x.shape[1]
    kernel = svm_mod.Kernel.linear() if cfg.kernel == "linear" else svm_mod.Kernel.rbf(gamma)
    dataset = [
        FeatureVector(row, FeatureKind(cfg.feature), fv.label)
        for row, fv in zip(x, vectors)
    ]
    cascade = svm_mod.train_cascade(
        dataset, kernel, cfg.c, cfg.tol, feature_kind=cfg.feature, pca_ref=pca_file
    )
    for name, stage in (
        ("stage0", cascade.stage0),
        ("stage1", cascade.stage1),
        ("stage2", cascade.stage2),
    ):
        svm_mod.save_model(stage, model_dir / f"{name}.txt")

    manifest = [
        f"feature = {cfg.feature}",
        f"dim = {dim}",
        f"pca = {pca_file or 'none'}",
        "stage0 = stage0.txt",
        "stage1 = stage1.txt",
        "stage2 = stage2.txt",
        f"kernel = {cfg.kernel}",
        f"gamma = {gamma:.17g}",
        f"c = {cfg.c:.17g}",
        f"tol = {cfg.tol:.17g}",
    ]
    (model_dir / MANIFEST_NAME).write_text("\n".join(manifest) + "\n", encoding="utf-8")
    print(f"trained cascade on {len(samples)} samples; models in {model_dir}")
    return 0


def load_manifest(model_dir: Path) -> dict[str, str]:
    path = model_dir / MANIFEST_NAME
    if not path.exists():
        raise FileNotFoundError(f"no {MANIFEST_NAME} in {model_dir}")
    pairs = {}
    for line in path.read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        key, _, value = line.partition("=")
        pairs[key.strip()] = value.strip()
    return pairs


def cmd_eval(args) -> int:
    model_dir = Path(args.model_dir)
    manifest = load_manifest(model_dir)
    dim = int(manifest["dim"])
    samples = read_libsvm(args.test_file)
    x, vectors = _dense_matrix(samples, dim)
    truth = [fv.label for fv in vectors]

    pca_name = manifest.get("pca", "none")
    if pca_name != "none":
        x = pca_mod.project(pca_mod.load_model(model_dir / pca_name), x)

    cascade = svm_mod.CascadeModel(
        stage0=svm_mod.load_model(model_dir / manifest["stage0"]),
        stage1=svm_mod.load_model(model_dir / manifest["stage1"]),
        stage2=svm_mod.load_model(model_dir / manifest["stage2"]),
        feature_kind=manifest.get("feature"),
        pca_ref=None if pca_name == "none" else pca_name,
    )
    if x.shape[1] != cascade.dim:
        raise ValueError(
            f"feature dimension mismatch: model expects {cascade.dim}, data has {x.shape[1]}"
        )
    predicted = svm_mod.classify_cascade_batch(cascade, x)
    cm = confusion(truth, predicted)
    text = report(cm)
    sys.stdout.write(text)
    if args.report_dir:
        report_dir = Path(args.report_dir)
        report_dir.mkdir(parents=True, exist_ok=True)
        (report_dir / "report.txt").write_text(text, encoding="utf-8")
        (report_dir / "confusion.csv").write_text(to_csv(cm), encoding="utf-8")
        save_figure(cm, report_dir / "confusion.png")
        print(f"report artifacts in {report_dir}")
    return 0


def cmd_label_serve(args) -> int:
    cfg = _load_pipeline_config(args.config) if args.config else None
    roi = cfg.roi if cfg else None
    httpd = serve(args.frames, args.labels, port=args.port, host=args.host, roi=roi)
    host, port = httpd.server_address[:2]
    print(f"labeling service on http://{host}:{port}/ (Ctrl-C to stop)")
    try:
        httpd.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        httpd.server_close()
    return 0


_DISPATCH = {
    "synth": cmd_synth,
    "extract": cmd_extract,
    "train": cmd_train,
    "eval": cmd_eval,
    "label-serve": cmd_label_serve,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _DISPATCH[args.command](args)
    except (ValueError, OSError, LibsvmParseError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
