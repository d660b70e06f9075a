"""Interpolation vs extrapolation: how far does the error model transfer?

Interpolation scores a random held-out set from the same substations.
Extrapolation is the harder, more honest question: leave one substation
out entirely, train on the others, and score the stranger.
"""

import json

from common import OUT, rule, small_config
from errmap.pipeline import run_pipeline

cfg = small_config()
run_pipeline(cfg, OUT, upto="eval")

rule("Scores (transformed target space; raw-space RMSE alongside)")
for split in ("interpolation", "extrapolation"):
    doc = json.loads((OUT / f"eval_{split}.json").read_text())
    agg = doc["aggregate"]
    print(f"\n{split}  (n={doc['n']} per fold, seeds {doc['seeds']})")
    print("  metric       mean")
    for metric in ("mse", "nlpd", "coverage95", "rmse_raw"):
        print(f"  {metric:<12} {agg[metric]['mean']:8.4f}")
    folds = doc["reports"][0]["folds"]
    if split == "extrapolation":
        worst = max(folds, key=lambda f: f["mse"])
        best = min(folds, key=lambda f: f["mse"])
        print(f"  easiest fold {best['fold']} (mse {best['mse']:.4f}), "
              f"hardest {worst['fold']} (mse {worst['mse']:.4f})")

rule("Reading the numbers")
print("Extrapolation error above interpolation error is the expected gap:")
print("an unseen substation sits in new feature territory.  The per-fold")
print("spread shows which buildings the model genuinely fails to transfer to.")
