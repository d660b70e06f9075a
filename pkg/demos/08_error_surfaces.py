"""Error and uncertainty surfaces: where the model trusts itself.

The trained GP is swept over a lattice per feature (and per feature pair),
with the remaining features pinned at their weighted medians.  Next to the
predicted error surface sit its uncertainty, the training-data density,
and a convex-hull in-domain mask.
"""

import csv

from common import OUT, rule, small_config
from errmap.pipeline import run_pipeline

cfg = small_config()
run_pipeline(cfg, OUT, upto="grid")

grids = sorted((OUT / "grids").glob("*.csv"))
rule("Exported surfaces")
for p in grids:
    print("  grids/" + p.name)

one_d = [p for p in grids if "__" not in p.name][0]
rule(f"1-D error curve: {one_d.stem}")
with one_d.open() as fh:
    rows = list(csv.DictReader(fh))
means = [float(r["mean_backtransformed"]) for r in rows]
span = max(means) - min(means) or 1.0
for r in rows:
    m = float(r["mean_backtransformed"])
    bar = "#" * (1 + int(28 * (m - min(means)) / span))
    mark = " " if r["in_domain"] == "1" else "x"
    print(f"  {float(r['axis1']):8.3f} {mark} {m:7.4f} {bar}")
print("  (x = outside the training hull: shown, but not to be trusted)")

two_d = [p for p in grids if "__" in p.name]
if two_d:
    rule(f"Uncertainty vs density on {two_d[0].stem}")
    with two_d[0].open() as fh:
        cells = [r for r in csv.DictReader(fh) if r["in_domain"] == "1"]
    cells.sort(key=lambda r: float(r["density"]))
    k = max(1, len(cells) // 10)
    sparse = sum(float(r["std"]) for r in cells[:k]) / k
    dense = sum(float(r["std"]) for r in cells[-k:]) / k
    print(f"  mean sigma over sparsest decile of cells: {sparse:.4f}")
    print(f"  mean sigma over densest decile of cells:  {dense:.4f}")
    print("  sparse regions carry wider bands: the model knows where it is guessing")
