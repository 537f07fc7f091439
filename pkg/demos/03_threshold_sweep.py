"""
How the complementary threshold trades bands for accuracy
=========================================================

One wrapper run per threshold. Accuracy is read off each run whenever it
reaches a given number of accepted bands, which gives a table with band
counts down the side and thresholds across the top. The last part writes
the ground truth and the predicted map as PPM images.
"""
import tempfile
from pathlib import Path

from hsiband import SyntheticSpec, classify_bands, make_synthetic_cube, table_report, threshold_sweep
from hsiband.evaluation import write_map

kinds = ("informative",) * 5 + ("redundant(1)", "redundant(2)") + ("noise",) * 13
cube, gt = make_synthetic_cube(SyntheticSpec(kinds, n_classes=5, rows=48, cols=48,
                                             separation=1.5), seed=3)

report = threshold_sweep(cube, gt, [0.0, 0.005, 0.02, 0.05])
matrices = [classify_bands(cube, gt, r.selected)[0] for r in report.results]
tables = table_report(report, gt, matrices)
print(tables["accuracy"].to_text())
print()
print(tables["per_class"].to_text())

# Larger thresholds stop sooner
for th, r in zip(report.thresholds, report.results):
    print(f"Th={th:<6g} kept {len(r.selected):2d} bands: {r.selected}")

out = Path(tempfile.mkdtemp(prefix="hsiband-maps-"))
_, c_est = classify_bands(cube, gt, report.results[2].selected)
write_map(gt.labels, out / "gt.ppm")
write_map(c_est, out / "c_est.ppm")
print("maps written to", out)
