"""The weighted Gaussian-process error model.

The GP learns CV(RMSE) as a smooth function of the selected condition
features.  Sample weights act through per-sample noise: a down-weighted
sample may be explained away, a heavy one pins the surface.
"""

import json

import numpy as np

from common import OUT, rule, small_config
from errmap.gp import predict
from errmap.pipeline import Workspace, load_model, run_pipeline
from errmap.ve import read_dataset

cfg = small_config()
run_pipeline(cfg, OUT, upto="train")

model, spec, features, weights = load_model(Workspace.at(OUT))
doc = json.loads((OUT / "model.json").read_text())

rule("Fitted kernel")
k = doc["kernel"]
print(f"  signal variance {k['signal_variance']:.4f}")
print(f"  lengthscale(s)  {['%.3f' % v for v in k['lengthscales']]}")
print(f"  noise variance  {k['noise_variance']:.2e}")
print(f"  log marginal likelihood {doc['lml']:.2f}  (jitter {doc['jitter']:.1e})")

rule("Per-sample noise from weights")
alpha = np.array(doc["alpha"])
print(f"  alpha: min {alpha.min():.4f}  mean {alpha.mean():.4f}  max {alpha.max():.4f}")
print("  lighter samples (rarer dates covered elsewhere) carry larger alpha")

rule("Held-back rows: prediction vs actual")
ds = read_dataset(OUT / "ve_dataset.csv")
rows = np.array(doc["rows"])
held = np.setdiff1d(np.arange(len(ds)), rows)[:5]
cols = [ds.feature_names.index(f) for f in features]
Xq = spec.transform_X(ds.X()[np.ix_(held, cols)], features)
mean, std = predict(model, Xq, include_noise=True)
mean_raw = np.asarray(spec.invert_y(mean))
for i, r in enumerate(held):
    actual = ds.y()[r]
    print(
        f"  row {r:3d}: predicted {mean_raw[i]:.4f}  actual {actual:.4f}  "
        f"(transformed-space z = {(spec.transform_y(np.array([actual]))[0] - mean[i]) / std[i]:+.2f})"
    )
