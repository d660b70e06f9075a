"""Shared demo scenario: small enough that every script runs in seconds.

All demos write artifacts under ./demo_out; stages already on disk are
reused, so running the scripts in any order never repeats work.
"""

import dataclasses
from pathlib import Path

from errmap.config import RunConfig

OUT = Path(__file__).resolve().parent.parent / "demo_out"


def small_config() -> RunConfig:
    cfg = RunConfig()
    return dataclasses.replace(
        cfg,
        scenario=dataclasses.replace(cfg.scenario, seed=3, days=52, substations=3),
        calibration=dataclasses.replace(cfg.calibration, candidates=120, seed=5),
        gp=dataclasses.replace(cfg.gp, restarts=1, maxiter=30),
        train=dataclasses.replace(cfg.train, n=60, k=3, seed=1),
        eval=dataclasses.replace(
            cfg.eval, n=12, seeds=(0,), restarts=1, maxiter=12,
            sizes=(8, 12), ks=(1, 2, 3),
        ),
        grid=dataclasses.replace(cfg.grid, resolution=12),
    )


def rule(title: str) -> None:
    print()
    print("=" * 64)
    print(title)
    print("=" * 64)
