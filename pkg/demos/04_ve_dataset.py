"""The validation-error dataset: every (calibration, validation) pairing.

Each calibrated window is replayed against every other same-season window
of the same substation.  The resulting CV(RMSE) is the target the error
model learns; overlapping validation windows are down-weighted so no
calendar day counts twice.
"""

import numpy as np

from common import OUT, rule, small_config
from errmap.pipeline import run_pipeline
from errmap.ve import read_dataset

cfg = small_config()
run_pipeline(cfg, OUT, upto="build-ve")

ds = read_dataset(OUT / "ve_dataset.csv")

rule("Dataset shape")
print(f"{len(ds)} samples x {len(ds.feature_names)} condition features")
subs = sorted({s.pair.substation_id for s in ds.samples})
print("substations:", ", ".join(subs))
gaps = [s.pair.time_gap_days for s in ds.samples]
print(f"calibration-to-validation gap: {min(gaps)}..{max(gaps)} days")

rule("One sample in words")
s = ds.samples[0]
print(f"  substation      {s.pair.substation_id}")
print(f"  calibrated on   {s.pair.cal_window.start_date} + {s.pair.cal_window.length_days}d")
print(f"  validated on    {s.pair.val_window.start_date} + {s.pair.val_window.length_days}d")
print(f"  error (target)  CV(RMSE) = {s.target_cvrmse:.4f}")
print(f"  weight          {s.weight:.4f}")

rule("Weights")
w = ds.weights()
print(f"min {w.min():.4f}  mean {w.mean():.4f}  max {w.max():.4f}")
print(f"sum = {w.sum():.6f} vs N = {len(ds)}  (conserved by construction)")
print("\nWindows near the season edges cover rarer dates, so they weigh more;")
print("mid-season windows overlap many others and weigh less.")

rule("Error spread the model will face")
y = ds.y()
print(f"CV(RMSE): min {y.min():.4f}  median {np.median(y):.4f}  max {y.max():.4f}")
