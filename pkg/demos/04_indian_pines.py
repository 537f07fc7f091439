"""
Indian Pines (AVIRIS 92AV3C)
============================

The scene is 145 x 145 pixels over 220 bands with 16 labeled classes. Point
HSIBAND_AVIRIS_DIR at a directory holding ``92AV3C.hdr`` (plus its raw
file) and ``92AV3C_gt.txt``. If you only have the common MATLAB files
``Indian_pines.mat`` and ``Indian_pines_gt.mat``, run this script with
``--from-mat DIR`` once to convert them; that step needs scipy.

Expect a few minutes for the full sweep.
"""
import os
import sys
from pathlib import Path

import numpy as np

from hsiband import (GroundTruth, HyperCube, classify_bands, estimate_gt_by_average, load_cube,
                     load_ground_truth, mi_curve, table_report, threshold_sweep, write_cube,
                     write_ground_truth)

root = Path(os.environ.get("HSIBAND_AVIRIS_DIR", "data/aviris"))

if len(sys.argv) == 3 and sys.argv[1] == "--from-mat":
    from scipy.io import loadmat

    src = Path(sys.argv[2])
    cube = loadmat(src / "Indian_pines.mat")["indian_pines"]
    labels = loadmat(src / "Indian_pines_gt.mat")["indian_pines_gt"]
    root.mkdir(parents=True, exist_ok=True)
    write_cube(HyperCube(cube.astype(np.uint16)), root / "92AV3C.hdr", data_name="92AV3C.raw")
    write_ground_truth(GroundTruth(labels), root / "92AV3C_gt.txt")
    print("converted into", root)

cube = load_cube(root / "92AV3C.hdr")
gt = load_ground_truth(root / "92AV3C_gt.txt", (cube.rows, cube.cols))
print(cube.rows, "x", cube.cols, "x", cube.n_bands, "|", gt.n_labeled, "labeled pixels")

# MI with the ground truth dips over the water absorption bands
curve = mi_curve(cube, gt)
print("lowest-MI bands:", sorted((np.argsort(curve.values)[:15] + 1).tolist()))

# Without ground truth, an average of bands 170..210 is a crude reference
estimate = mi_curve(cube, estimate_gt_by_average(cube, (170, 210)), labeled_only=False)
print("correlation of the two curves:", np.corrcoef(curve.values, estimate.values)[0, 1])

rows = (10, 18, 20, 25, 27, 30, 35, 40, 45, 50, 53, 60, 70, 80, 90, 100, 102, 114)
report = threshold_sweep(cube, gt, [0.0, 0.001, 0.008, 0.015, 0.02, 0.03],
                         checkpoints=rows, curve=curve)
matrices = [classify_bands(cube, gt, r.selected)[0] for r in report.results]
tables = table_report(report, gt, matrices)
print(tables["accuracy"].to_text())
print(tables["per_class"].to_text())
