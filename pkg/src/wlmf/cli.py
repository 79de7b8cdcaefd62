"""Command-line entry point: ``wlmf <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import imaging
from .learn import GridSpec, SvmModel, cross_validate_grid, decision_scores, evaluate, fit_scaler, train_svm
from .learn.metrics import write_roc_csv
from .mfa import MfaConfig, compute_leaders, legendre_parametric, log_cumulants, structure_functions
from .pipeline import (
    PipelineConfig,
    PipelineStageError,
    enhance,
    extract_with_augmentation,
    features_of_prepared,
    prepare,
    read_features_csv,
    read_labels,
    write_features_csv,
)
from .synth import CascadeSpec, FbmSpec, cascade2d, fbm2d
from .texture import texture_features
from .validation import run_suite
from .wavelet import dwt2

IMAGE_SUFFIXES = (".png", ".pgm", ".img", ".raw")


class CliError(Exception):
    def __init__(self, stage: str, message: str):
        super().__init__(message)
        self.stage = stage


def _load_config(path) -> PipelineConfig:
    if path is None:
        return PipelineConfig()
    try:
        return PipelineConfig.load(path)
    except (OSError, ValueError, TypeError, KeyError) as exc:
        raise CliError("config", f"{path}: {exc}") from exc


def _provenance(cfg: PipelineConfig) -> str:
    return f"config_sha256={cfg.sha256()} seed={cfg.seed}"


def _list_images(directory: Path) -> list:
    if not directory.is_dir():
        raise CliError("input", f"images directory not found: {directory}")
    files = sorted(p for p in directory.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
    if not files:
        raise CliError("input", f"no images in {directory}")
    return files


def _find_mask(masks_dir: Path | None, image: Path) -> Path | None:
    if masks_dir is None:
        return None
    for candidate in [masks_dir / image.name] + [masks_dir / (image.stem + s) for s in (".png", ".pgm")]:
        if candidate.is_file():
            return candidate
    raise CliError("mask", f"no mask for {image.name} in {masks_dir}")


def _write_pgm(data: np.ndarray, path: Path, bit_depth: int = 16) -> None:
    lo, hi = float(data.min()), float(data.max())
    scaled = np.zeros_like(data) if hi == lo else (data - lo) / (hi - lo) * (2**bit_depth - 1)
    imaging.save_image(scaled, path, bit_depth)


# ---------------------------------------------------------------------------
# subcommands


def cmd_synth(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    params = args.hurst if args.suite == "fbm" else args.std
    labels = []
    manifest = {"suite": args.suite, "size": args.size, "seeds": args.seeds, "params": params}
    for index, value in enumerate(params):
        for seed in range(args.seeds):
            if args.suite == "fbm":
                field_ = fbm2d(FbmSpec(value, args.size, seed))
                name = f"fbm_H{value:.2f}_s{seed:03d}.pgm"
            else:
                field_ = cascade2d(CascadeSpec(args.mean, value, args.size, seed))
                name = f"cascade_s{value:.2f}_seed{seed:03d}.pgm"
            _write_pgm(field_, out / name)
            labels.append((name, 0 if index == 0 else 1))
    with (out / "labels.csv").open("w") as fh:
        fh.write("filename,label\n")
        fh.writelines(f"{n},{l}\n" for n, l in labels)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    print(f"wrote {len(labels)} images to {out}")
    return 0


def cmd_preprocess(args) -> int:
    cfg = _load_config(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    masks_dir = Path(args.masks) if args.masks else None
    for path in _list_images(Path(args.images)):
        img = imaging.load_image(path)
        mask_path = _find_mask(masks_dir, path)
        mask = None if mask_path is None else imaging.load_mask(mask_path).data
        prepared = prepare(img, mask, cfg, path.name)
        target = out / (path.stem + ".pgm")
        imaging.save_image(np.clip(prepared, 0, 2**img.bit_depth - 1), target, img.bit_depth)
        if args.augment:
            for n, variant in enumerate(imaging.augment(prepared, cfg.augment, cfg.seed)):
                imaging.save_image(
                    np.clip(variant, 0, 2**img.bit_depth - 1),
                    out / f"{path.stem}_aug{n:03d}.pgm",
                    img.bit_depth,
                )
    (out / "provenance.txt").write_text(_provenance(cfg) + "\n")
    print(f"preprocessed images written to {out}")
    return 0


def _extract_one(job):
    path, mask_path, label, cfg, do_augment, seed = job
    img = imaging.load_image(path)
    mask = None if mask_path is None else imaging.load_mask(mask_path).data
    name = Path(path).name
    if do_augment:
        return extract_with_augmentation(img, mask, cfg, name, label, seed)
    prepared = prepare(img, mask, cfg, name)
    return [(name, features_of_prepared(prepared, mask, cfg, name, label))]


def cmd_extract(args) -> int:
    cfg = _load_config(args.config)
    if args.features:
        cfg.features = args.features
    images = _list_images(Path(args.images))
    masks_dir = Path(args.masks) if args.masks else None
    if masks_dir is not None and not masks_dir.is_dir():
        raise CliError("input", f"masks directory not found: {masks_dir}")
    labels = {}
    if args.labels:
        try:
            labels = read_labels(args.labels)
        except (OSError, ValueError, IndexError) as exc:
            raise CliError("labels", str(exc)) from exc
    seeds = np.random.SeedSequence(cfg.seed).spawn(len(images))
    jobs = []
    for path, ss in zip(images, seeds):
        if args.labels and path.name not in labels:
            raise CliError("labels", f"no label for {path.name}")
        jobs.append(
            (str(path), _find_mask(masks_dir, path), labels.get(path.name), cfg, args.augment,
             int(ss.generate_state(1)[0]))
        )
    workers = args.jobs or os.cpu_count() or 1
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            results = list(pool.map(_extract_one, jobs))
    else:
        results = [_extract_one(j) for j in jobs]
    rows = [row for rows in results for row in rows]
    write_features_csv(rows, cfg, args.out)
    print(f"wrote {len(rows)} feature rows ({cfg.features}) to {args.out}")
    return 0


def _split_outputs(value: str) -> tuple:
    parts = [p for p in value.split(",") if p]
    if len(parts) != 2:
        raise CliError("train", "--out expects model.json,report.json")
    return Path(parts[0]), Path(parts[1])


def _labelled(table, stage: str):
    if np.any((table.y != 0) & (table.y != 1)):
        raise CliError(stage, "every feature row needs a 0/1 label")
    return table.X, table.y


def cmd_train(args) -> int:
    model_path, report_path = _split_outputs(args.out)
    table = read_features_csv(args.features)
    X, y = _labelled(table, "train")
    if args.grid == "default":
        grid = GridSpec()
    else:
        grid = GridSpec.from_dict(json.loads(Path(args.grid).read_text()))
    report = cross_validate_grid(X, y, grid, args.folds, args.beta, args.seed)
    best = report.best
    scaler = fit_scaler(X)
    model = train_svm(scaler.transform(X), y, best.params(), scaler=scaler)
    provenance = {
        "config_sha256": table.meta.get("config_sha256"),
        "seed": args.seed,
        "feature_names": table.names,
    }
    model_path.write_text(json.dumps({**provenance, "model": model.to_dict()}, indent=2) + "\n")
    report_path.write_text(json.dumps({**provenance, "grid_report": report.to_dict()}, indent=2) + "\n")
    print(
        f"{len(report.cells)} cells; best kernel={best.kernel} C={best.C:g} "
        f"class_weight={best.class_weight} mean F{args.beta:g}={best.mean['f_beta']:.4f} "
        f"mean AUC={best.mean['auc']:.4f}"
    )
    return 0


def cmd_evaluate(args) -> int:
    doc = json.loads(Path(args.model).read_text())
    model = SvmModel.from_dict(doc["model"])
    table = read_features_csv(args.features)
    if doc.get("feature_names") and doc["feature_names"] != table.names:
        raise CliError("evaluate", "feature columns differ from the training set")
    X, y = _labelled(table, "evaluate")
    Z = model.scaler.transform(X) if model.scaler is not None else X
    report = evaluate(decision_scores(model, Z), y, args.beta)
    out = {
        "config_sha256": table.meta.get("config_sha256"),
        "seed": doc.get("seed"),
        **{k: v for k, v in report.to_dict().items() if k != "roc_points"},
    }
    print(json.dumps(out, indent=2))
    if args.roc:
        write_roc_csv(report.roc_points, args.roc, comment=f"config_sha256={out['config_sha256']} seed={out['seed']}")
    return 0


def cmd_validate(args) -> int:
    checks = run_suite(args.suite, args.seeds, args.size)
    for check in checks:
        print(check.line())
    failed = sum(not c.passed for c in checks)
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    return 1 if failed else 0


def _timed(fn, repeats: int):
    best = float("inf")
    result = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def cmd_timing(args) -> int:
    cfg = _load_config(args.config)
    if args.image:
        img = np.asarray(imaging.load_image(args.image))
    else:
        img = fbm2d(FbmSpec(0.5, args.size, cfg.seed)) * 1000.0
    mask = np.ones(img.shape, bool)
    r = args.repeats
    mcfg: MfaConfig = cfg.mfa
    stages = []
    t, enhanced = _timed(lambda: enhance(img, cfg), r)
    stages.append(("enhance", t))
    t, prepared = _timed(lambda: imaging.apply_mask_smooth(enhanced, mask, cfg.mask_sigma), r)
    stages.append(("mask+smooth", t))
    t, pyr = _timed(lambda: dwt2(prepared, mcfg.wavelet_name, mcfg.max_scale, mcfg.normalization), r)
    stages.append(("dwt2", t))
    t, leaders = _timed(lambda: compute_leaders(pyr, mcfg), r)
    stages.append(("leaders", t))
    q = np.linspace(0, 2, mcfg.feature_q_points)
    t, _ = _timed(lambda: (structure_functions(leaders, mcfg, q=q), log_cumulants(leaders, mcfg),
                           legendre_parametric(leaders, mcfg, q=q)), r)
    stages.append(("mfa estimators", t))
    t, _ = _timed(lambda: texture_features(prepared, cfg.texture, mask), r)
    stages.append(("glcm+haralick", t))
    total = sum(s for _, s in stages)
    print(f"image {img.shape[0]}x{img.shape[1]}, best of {r} runs ({_provenance(cfg)})")
    for name, s in stages:
        print(f"  {name:<16} {s * 1e3:9.2f} ms  {100 * s / total:5.1f}%")
    print(f"  {'total':<16} {total * 1e3:9.2f} ms")
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wlmf", description="Wavelet-leader multifractal texture pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate synthetic oracle images as PGM")
    p.add_argument("--suite", choices=("fbm", "cascade"), required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--size", type=int, default=512)
    p.add_argument("--hurst", type=float, nargs="+", default=[0.3, 0.7])
    p.add_argument("--std", type=float, nargs="+", default=[0.0, 0.3])
    p.add_argument("--mean", type=float, default=1.0, help="cascade mean exponent")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("preprocess", help="enhance and mask images")
    p.add_argument("--images", required=True)
    p.add_argument("--masks")
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.add_argument("--augment", action="store_true", help="also write augmented variants")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("extract", help="compute feature CSV")
    p.add_argument("--images", required=True)
    p.add_argument("--masks")
    p.add_argument("--labels")
    p.add_argument("--config")
    p.add_argument("--features", choices=("mfa", "texture", "combined"))
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=None, help="worker processes (default: all cores)")
    p.add_argument("--augment", action="store_true", help="add augmented variants as extra rows")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train", help="grid search and final SVM fit")
    p.add_argument("--features", required=True)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--beta", type=float, default=2.0)
    p.add_argument("--grid", default="default", help="'default' or a JSON grid file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="model.json,report.json")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="metrics and ROC of a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--beta", type=float, default=2.0)
    p.add_argument("--roc")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("validate", help="run the estimator oracle suite")
    p.add_argument("--suite", choices=("fbm", "cascade", "all"), default="all")
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--size", type=int, default=512)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("timing", help="per-stage wall-clock report")
    p.add_argument("--image")
    p.add_argument("--size", type=int, default=512)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--config")
    p.set_defaults(func=cmd_timing)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error [{exc.stage}]: {exc}", file=sys.stderr)
    except PipelineStageError as exc:
        print(f"error [{exc.stage}]: {exc}", file=sys.stderr)
    except imaging.ImageLoadError as exc:
        print(f"error [load]: {exc}", file=sys.stderr)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error [{args.command}]: {exc}", file=sys.stderr)
    return 2


if __name__ == "__main__":
    sys.exit(main())
