"""Cleaning: flag faulty hours, then judge whole heating seasons.

Sample-level screens catch spikes, frozen plateaus, and physically
inconsistent readings; the season screen checks that daily energy actually
tracks heating degree days before a season is allowed into calibration.
"""

import json

from common import OUT, rule, small_config
from errmap.pipeline import run_pipeline

cfg = small_config()
run_pipeline(cfg, OUT, upto="clean")

report = json.loads((OUT / "cleaning_report.json").read_text())

rule("Sample-level flags per substation")
for sub_id, doc in sorted(report.items()):
    print(
        f"  {sub_id}: {doc['n_outlier']:3d} outlier hours   "
        f"{doc['n_inconsistent']:3d} inconsistent hours   "
        f"{doc['n_atypical']:5d} hours in rejected seasons"
    )

rule("Season screens (daily energy vs heating degree days)")
for sub_id, doc in sorted(report.items()):
    for s in doc["screens"]:
        r = "r=%.3f" % s["r"] if s["r"] is not None else "r undefined"
        verdict = "kept" if s["kept"] else f"dropped ({s['reason']})"
        print(f"  {sub_id} {s['label']}: {s['n_days']} valid days, {r} -> {verdict}")

rule("Why it matters")
print("Calibration trusts every unmasked hour.  A frozen meter or an")
print("atypical season would otherwise be fitted as if it were physics.")
