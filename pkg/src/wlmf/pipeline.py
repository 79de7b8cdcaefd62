"""End-to-end feature extraction: enhance, mask, multifractal and texture features."""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .imaging import AugmentParams, apply_mask_smooth, augment
from .learn.model_selection import GridSpec
from .learn.scaling import FeatureVector
from .mfa import MfaConfig, MultifractalFeatures, extract_mfa_features, feature_q_grid
from .preprocess import EnhanceConfig, hist_equalize, wavelet_morph_enhance
from .texture import TextureConfig, TextureFeatures, texture_features

FEATURE_MODES = ("mfa", "texture", "combined")
ENHANCEMENTS = ("wavelet_morph", "hist_equalize", "none")


class PipelineStageError(RuntimeError):
    """A pipeline stage failed; the message names the stage and the image."""

    def __init__(self, stage: str, source: str, cause: Exception):
        super().__init__(f"stage '{stage}' failed for {source or '<image>'}: {cause}")
        self.stage = stage
        self.source = source


@dataclass
class PipelineConfig:
    mfa: MfaConfig = field(default_factory=MfaConfig)
    enhance: EnhanceConfig = field(default_factory=EnhanceConfig)
    texture: TextureConfig = field(default_factory=TextureConfig)
    augment: AugmentParams = field(default_factory=AugmentParams)
    grid: GridSpec = field(default_factory=GridSpec)
    features: str = "combined"
    enhancement: str = "wavelet_morph"
    mask_sigma: float = 2.0
    equalize_levels: int = 256
    folds: int = 5
    beta: float = 2.0
    seed: int = 0
    images_dir: str | None = None
    masks_dir: str | None = None
    labels_file: str | None = None
    output_dir: str | None = None

    def __post_init__(self):
        if self.features not in FEATURE_MODES:
            raise ValueError(f"features must be one of {FEATURE_MODES}")
        if self.enhancement not in ENHANCEMENTS:
            raise ValueError(f"enhancement must be one of {ENHANCEMENTS}")
        if self.mask_sigma < 0:
            raise ValueError("mask_sigma must be >= 0")
        if self.folds < 2:
            raise ValueError("folds must be >= 2")

    def to_dict(self) -> dict:
        data = {k: v for k, v in asdict(self).items() if k not in ("mfa", "grid")}
        data["mfa"] = self.mfa.to_dict()
        data["grid"] = self.grid.to_dict()
        data["texture"]["offsets"] = [list(o) for o in self.texture.offsets]
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        data = dict(data)
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown PipelineConfig keys: {sorted(unknown)}")
        if "mfa" in data:
            data["mfa"] = MfaConfig.from_dict(data["mfa"])
        if "enhance" in data:
            data["enhance"] = EnhanceConfig(**data["enhance"])
        if "texture" in data:
            tex = dict(data["texture"])
            if "offsets" in tex:
                tex["offsets"] = tuple(tuple(o) for o in tex["offsets"])
            data["texture"] = TextureConfig(**tex)
        if "augment" in data:
            data["augment"] = AugmentParams(**data["augment"])
        if "grid" in data:
            data["grid"] = GridSpec.from_dict(data["grid"])
        return cls(**data)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def sha256(self) -> str:
        """Hash of the settings that affect results (paths excluded)."""
        data = self.to_dict()
        for key in ("images_dir", "masks_dir", "labels_file", "output_dir"):
            data.pop(key)
        canonical = json.dumps(data, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()

    def check_paths(self) -> None:
        for key in ("images_dir", "masks_dir", "labels_file"):
            value = getattr(self, key)
            if value is not None and not Path(value).exists():
                raise FileNotFoundError(f"{key} does not exist: {value}")


def feature_names(cfg: PipelineConfig) -> list:
    names = []
    if cfg.features in ("mfa", "combined"):
        q = feature_q_grid(cfg.mfa)
        mf = MultifractalFeatures(q, q, q, np.zeros(cfg.mfa.n_cumulants))
        names += mf.names()
    if cfg.features in ("texture", "combined"):
        names += TextureFeatures.names()
    return names


def _stage(name: str, source: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except Exception as exc:
        raise PipelineStageError(name, source, exc) from exc


def enhance(img, cfg: PipelineConfig) -> np.ndarray:
    data = np.asarray(img, dtype=float)
    if cfg.enhancement == "wavelet_morph":
        return wavelet_morph_enhance(data, cfg.enhance)
    if cfg.enhancement == "hist_equalize":
        return hist_equalize(data, cfg.equalize_levels)
    return data


def prepare(img, mask, cfg: PipelineConfig, source: str = "") -> np.ndarray:
    """Enhance then mask and smooth."""
    data = np.asarray(img, dtype=float)
    keep = np.ones(data.shape, bool) if mask is None else np.asarray(mask, dtype=bool)
    if keep.shape != data.shape:
        raise PipelineStageError(
            "mask", source, ValueError(f"image {data.shape} vs mask {keep.shape}")
        )
    enhanced = _stage("enhance", source, enhance, data, cfg)
    return _stage("mask", source, apply_mask_smooth, enhanced, keep, cfg.mask_sigma)


def features_of_prepared(prepared, mask, cfg: PipelineConfig, source: str = "", label=None) -> FeatureVector:
    keep = None if mask is None else np.asarray(mask, dtype=bool)
    values = []
    if cfg.features in ("mfa", "combined"):
        mf = _stage("mfa", source, extract_mfa_features, prepared, cfg.mfa)
        values.append(mf.values())
    if cfg.features in ("texture", "combined"):
        tf = _stage("texture", source, texture_features, prepared, cfg.texture, keep)
        values.append(tf.values())
    return FeatureVector(feature_names(cfg), np.concatenate(values), label)


def extract_features(img, mask, cfg: PipelineConfig | None = None, source: str = "", label=None) -> FeatureVector:
    """Feature vector of one image: enhance, mask+smooth, then features.

    ``cfg.features`` selects the multifractal group, the texture group or
    both (in that order).
    """
    cfg = cfg or PipelineConfig()
    prepared = prepare(img, mask, cfg, source)
    return features_of_prepared(prepared, mask, cfg, source, label)


def extract_with_augmentation(img, mask, cfg: PipelineConfig, source: str = "", label=None, seed: int = 0) -> list:
    """``(source, FeatureVector)`` for the image and its augmented variants.

    Augmentation is applied to the enhanced, masked image; the mask is warped
    with the same transform (nearest: kept where its warp exceeds 0.5).
    """
    prepared = prepare(img, mask, cfg, source)
    rows = [(source, features_of_prepared(prepared, mask, cfg, source, label))]
    variants = _stage("augment", source, augment, prepared, cfg.augment, seed)
    keep = np.ones(prepared.shape) if mask is None else np.asarray(mask, dtype=float)
    masks = augment(keep, cfg.augment, seed)
    for n, (variant, warped) in enumerate(zip(variants, masks)):
        m = warped > 0.5
        name = f"{source}#aug{n:03d}"
        rows.append((name, features_of_prepared(variant, m if m.any() else None, cfg, name, label)))
    return rows


# ---------------------------------------------------------------------------
# CSV


def features_csv_text(rows, cfg: PipelineConfig) -> str:
    """CSV of ``(source_path, FeatureVector)`` rows with a provenance comment."""
    names = feature_names(cfg)
    buf = io.StringIO()
    buf.write(f"# config_sha256={cfg.sha256()} seed={cfg.seed}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(names + ["label", "source_path"])
    for source, fv in rows:
        if fv.names != names:
            raise ValueError(f"{source}: feature names differ from the configured set")
        label = "" if fv.label is None else int(fv.label)
        writer.writerow([repr(float(v)) for v in fv.values] + [label, source])
    return buf.getvalue()


def write_features_csv(rows, cfg: PipelineConfig, path) -> None:
    Path(path).write_text(features_csv_text(rows, cfg))


@dataclass
class FeatureTable:
    names: list
    X: np.ndarray
    y: np.ndarray
    sources: list
    meta: dict


def read_features_csv(path) -> FeatureTable:
    lines = Path(path).read_text().splitlines()
    meta = {}
    body = []
    for line in lines:
        if line.startswith("#"):
            for token in line[1:].split():
                key, _, value = token.partition("=")
                meta[key] = value
        elif line.strip():
            body.append(line)
    reader = csv.reader(body)
    header = next(reader)
    if header[-2:] != ["label", "source_path"]:
        raise ValueError(f"{path}: last columns must be label,source_path")
    names = header[:-2]
    X, y, sources = [], [], []
    for row in reader:
        X.append([float(v) for v in row[:-2]])
        y.append(int(row[-2]) if row[-2] != "" else -1)
        sources.append(row[-1])
    return FeatureTable(names, np.array(X, dtype=float).reshape(-1, len(names)), np.array(y), sources, meta)


def read_labels(path) -> dict:
    """``filename -> label`` from a ``filename,label`` CSV (header optional)."""
    labels = {}
    with Path(path).open(newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].startswith("#"):
                continue
            name, value = row[0].strip(), row[1].strip()
            if value not in ("0", "1"):
                if not labels and value.lower() == "label":
                    continue
                raise ValueError(f"{path}: label for {name!r} must be 0 or 1, got {value!r}")
            labels[name] = int(value)
    return labels
