"""
Information measures on small tables
====================================

Entropy, mutual information and the Fano interval on hand-made joint
histograms, then on a single synthetic band.
"""
import numpy as np

from hsiband import (JointHistogram, SyntheticSpec, conditional_entropy, entropy, fano_bounds,
                     information_measures, make_synthetic_cube, mi_curve, mutual_information)

# A joint histogram counts how often bin a of one variable meets bin b of
# another. Rows are a, columns are b.
h = JointHistogram(np.array([[2, 1], [1, 2]]))
print("H(A,B) =", entropy(h))
print("I(A;B) =", mutual_information(h))
print("H(A|B) =", conditional_entropy(h))

# A perfect diagonal carries all the information, an outer product none
print("diagonal MI:", mutual_information(JointHistogram(np.eye(4, dtype=int) * 5)))
print("independent MI:", mutual_information(JointHistogram(np.outer([1, 2], [3, 1]))))

# Many tables at once
stack = np.random.default_rng(0).integers(0, 5, size=(6, 3, 3))
stack[:, 0, 0] += 1
m = information_measures(stack)
print("MI of six random tables:", np.round(m.mi, 4))
print("identity H(A) - H(A|B) - I:", np.abs(m.h_a - m.h_a_given_b - m.mi).max())

# Fano: with 16 classes, the error probability of any predictor is pinned
# to an interval of width 1/log2(16) = 0.25
for H in (0.0, 2.0, 4.0):
    fb = fano_bounds(H, 16)
    print(f"H(C|X)={H}: Pe in [{fb.lower}, {fb.upper}]")

# On imagery: MI of every band of a small synthetic cube with its labels
spec = SyntheticSpec(("informative", "noise", "redundant(1)", "noise"), n_classes=3)
cube, gt = make_synthetic_cube(spec, seed=1)
curve = mi_curve(cube, gt)
for band in curve.bands:
    print(f"band {band} ({spec.bands[band - 1]}): {curve[band]:.3f} bits")
