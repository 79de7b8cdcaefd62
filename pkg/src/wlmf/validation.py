"""Oracle suites checking the multifractal estimators on synthetic fields."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mfa import MfaConfig, analyze
from .synth import CascadeSpec, FbmSpec, cascade2d, fbm2d


@dataclass
class Check:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail}"


def fbm_ensemble(hurst: float, seeds: int, size: int, cfg: MfaConfig | None = None) -> dict:
    """Ensemble means of ``c1``, ``c2`` and ``zeta(1)``, ``zeta(2)``."""
    cfg = cfg or MfaConfig()
    c1, c2, z1, z2 = [], [], [], []
    for seed in range(seeds):
        res = analyze(fbm2d(FbmSpec(hurst, size, seed)), cfg, q=[1.0, 2.0])
        c1.append(res.cumulants[0])
        c2.append(res.cumulants[1])
        z1.append(res.zeta.zeta[0])
        z2.append(res.zeta.zeta[1])
    return {"c1": np.mean(c1), "c2": np.mean(c2), "zeta1": np.mean(z1), "zeta2": np.mean(z2)}


def cascade_ensemble(std: float, seeds: int, size: int, cfg: MfaConfig | None = None) -> float:
    """Ensemble mean of ``c2`` for log-normal cascades with multiplier std ``std``."""
    cfg = cfg or MfaConfig()
    values = [
        analyze(cascade2d(CascadeSpec(exponent_std=std, size=size, seed=seed)), cfg).cumulants[1]
        for seed in range(seeds)
    ]
    return float(np.mean(values))


def fbm_suite(seeds: int = 10, size: int = 512, hursts=(0.3, 0.5, 0.7)) -> list:
    checks = []
    for H in hursts:
        m = fbm_ensemble(H, seeds, size)
        ok = (
            abs(m["c1"] - H) <= 0.1
            and abs(m["c2"]) <= 0.05
            and abs(m["zeta1"] - H) <= 0.15
            and abs(m["zeta2"] - 2 * H) <= 0.15
        )
        detail = (
            f"c1={m['c1']:.4f} c2={m['c2']:+.4f} "
            f"zeta(1)={m['zeta1']:.4f} zeta(2)={m['zeta2']:.4f}"
        )
        checks.append(Check(f"fbm H={H}", ok, detail))
    return checks


def cascade_suite(seeds: int = 10, size: int = 512, stds=(0.1, 0.2, 0.3, 0.4)) -> list:
    zero = cascade_ensemble(0.0, seeds, size)
    checks = [Check("cascade s=0 |c2| <= 0.01", abs(zero) <= 0.01, f"c2={zero:+.2e}")]
    means = [cascade_ensemble(s, seeds, size) for s in stds]
    if 0.3 in stds:
        c2 = means[list(stds).index(0.3)]
        checks.append(Check("cascade s=0.3 c2 < -0.01", c2 < -0.01, f"c2={c2:+.4f}"))
    detail = " ".join(f"s={s}:{c:+.4f}" for s, c in zip(stds, means))
    checks.append(Check("cascade c2 strictly decreasing in s", bool(np.all(np.diff(means) < 0)), detail))
    return checks


def run_suite(name: str, seeds: int = 10, size: int = 512) -> list:
    if name not in ("fbm", "cascade", "all"):
        raise ValueError(f"unknown suite {name!r}")
    checks = []
    if name in ("fbm", "all"):
        checks += fbm_suite(seeds, size)
    if name in ("cascade", "all"):
        checks += cascade_suite(seeds, size)
    return checks
