import json

import numpy as np
import pytest

from wlmf.imaging import AugmentParams
from wlmf.learn import GridSpec
from wlmf.mfa import MfaConfig
from wlmf.pipeline import (
    PipelineConfig,
    PipelineStageError,
    extract_features,
    extract_with_augmentation,
    feature_names,
    features_csv_text,
    read_features_csv,
    read_labels,
    write_features_csv,
)
from wlmf.synth import FbmSpec, fbm2d


def image(seed=0, size=128):
    return fbm2d(FbmSpec(0.5, size, seed)) * 100


class TestNames:
    def test_counts(self):
        assert len(feature_names(PipelineConfig())) == 19
        assert len(feature_names(PipelineConfig(features="mfa"))) == 13
        assert len(feature_names(PipelineConfig(features="texture"))) == 6

    def test_order(self):
        names = feature_names(PipelineConfig())
        assert names[:5] == ["h_q0.00", "h_q0.50", "h_q1.00", "h_q1.50", "h_q2.00"]
        assert names[5] == "D_q0.00" and names[10:13] == ["c1", "c2", "c3"]
        assert names[13:] == [
            "glcm_correlation", "glcm_asm", "glcm_homogeneity",
            "glcm_contrast", "glcm_dissimilarity", "glcm_energy",
        ]


class TestExtract:
    @pytest.mark.parametrize("enhancement", ["wavelet_morph", "hist_equalize", "none"])
    def test_vector(self, enhancement):
        cfg = PipelineConfig(enhancement=enhancement)
        fv = extract_features(image(), None, cfg, "a.pgm", 1)
        assert fv.names == feature_names(cfg) and fv.label == 1
        assert np.all(np.isfinite(fv.values))

    def test_modes_are_consistent(self):
        img = image(1)
        full = extract_features(img, None, PipelineConfig())
        mfa = extract_features(img, None, PipelineConfig(features="mfa"))
        tex = extract_features(img, None, PipelineConfig(features="texture"))
        assert np.array_equal(full.values, np.r_[mfa.values, tex.values])

    def test_mask_changes_texture(self):
        img = image(2)
        mask = np.zeros(img.shape, bool)
        mask[16:112, 20:100] = True
        a = extract_features(img, None, PipelineConfig(features="texture")).values
        b = extract_features(img, mask, PipelineConfig(features="texture")).values
        assert not np.array_equal(a, b)

    def test_deterministic_csv(self, tmp_path):
        cfg = PipelineConfig()
        rows = [(f"img{s}.pgm", extract_features(image(s), None, cfg, label=s % 2)) for s in range(2)]
        rows2 = [(f"img{s}.pgm", extract_features(image(s), None, cfg, label=s % 2)) for s in range(2)]
        assert features_csv_text(rows, cfg) == features_csv_text(rows2, cfg)
        path = tmp_path / "f.csv"
        write_features_csv(rows, cfg, path)
        table = read_features_csv(path)
        assert table.meta == {"config_sha256": cfg.sha256(), "seed": "0"}
        assert table.names == feature_names(cfg) and table.sources == ["img0.pgm", "img1.pgm"]
        assert np.array_equal(table.X, np.vstack([fv.values for _, fv in rows]))
        assert table.y.tolist() == [0, 1]

    def test_augmentation_rows(self):
        cfg = PipelineConfig(features="texture", augment=AugmentParams(count_per_transform=2))
        rows = extract_with_augmentation(image(3), None, cfg, "x.pgm", 0, seed=5)
        assert len(rows) == 7 and rows[1][0] == "x.pgm#aug000"
        again = extract_with_augmentation(image(3), None, cfg, "x.pgm", 0, seed=5)
        assert all(np.array_equal(a[1].values, b[1].values) for a, b in zip(rows, again))

    def test_stage_errors(self):
        with pytest.raises(PipelineStageError) as info:
            extract_features(np.full((128, 128), 5.0), None, PipelineConfig(features="mfa", enhancement="none"), "flat.pgm")
        assert info.value.stage == "mfa" and "flat.pgm" in str(info.value)
        with pytest.raises(PipelineStageError) as info:
            extract_features(image(), np.ones((64, 64), bool), PipelineConfig(), "m.pgm")
        assert info.value.stage == "mask"
        with pytest.raises(PipelineStageError) as info:
            extract_features(np.ones((2, 2)), None, PipelineConfig(), "tiny.pgm")
        assert info.value.stage == "enhance"


class TestConfig:
    def test_json_round_trip(self, tmp_path):
        cfg = PipelineConfig(
            mfa=MfaConfig(min_scale=1, max_scale=4, gamint=0.5),
            grid=GridSpec(("linear",), (1.0, 2.0), ("equal",)),
            features="mfa",
            seed=7,
        )
        path = tmp_path / "cfg.json"
        path.write_text(cfg.to_json())
        back = PipelineConfig.load(path)
        assert back == cfg and back.sha256() == cfg.sha256()

    def test_hash_tracks_settings_not_paths(self):
        base = PipelineConfig()
        assert PipelineConfig(images_dir="/x").sha256() == base.sha256()
        assert PipelineConfig(seed=1).sha256() != base.sha256()
        assert PipelineConfig(mfa=MfaConfig(gamint=0.5)).sha256() != base.sha256()

    def test_invalid(self):
        for kwargs in ({"features": "all"}, {"enhancement": "clahe"}, {"mask_sigma": -1}, {"folds": 1}):
            with pytest.raises(ValueError):
                PipelineConfig(**kwargs)
        with pytest.raises(ValueError, match="unknown"):
            PipelineConfig.from_dict({"colour": 1})

    def test_check_paths(self, tmp_path):
        PipelineConfig(images_dir=str(tmp_path)).check_paths()
        with pytest.raises(FileNotFoundError):
            PipelineConfig(labels_file=str(tmp_path / "none.csv")).check_paths()


class TestLabels:
    def test_read(self, tmp_path):
        path = tmp_path / "labels.csv"
        path.write_text("filename,label\na.pgm,1\nb.pgm,0\n")
        assert read_labels(path) == {"a.pgm": 1, "b.pgm": 0}
        path.write_text("a.pgm,1\n")
        assert read_labels(path) == {"a.pgm": 1}
        path.write_text("a.pgm,2\n")
        with pytest.raises(ValueError):
            read_labels(path)
