"""Discrete information measures over quantized bands and class labels.

All logarithms are base 2, so every quantity is in bits.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Optional, Sequence, Tuple, Union

import numpy as np

from .hypercube import BandImage, GroundTruth, HyperCube


@dataclass(frozen=True)
class Quantizer:
    """Linear min-max binning.

    ``value_range`` pins the scaling; when it is None the range is taken from
    whatever values are being quantized.
    """

    n_bins: int = 256
    value_range: Optional[Tuple[float, float]] = None

    def __post_init__(self):
        if self.n_bins < 2:
            raise ValueError("n_bins must be >= 2")
        if self.value_range is not None and not self.value_range[0] <= self.value_range[1]:
            raise ValueError("value_range must be (min, max) with min <= max")


def quantize(values, q: Quantizer = Quantizer()) -> np.ndarray:
    """Map values to bin indices ``floor((v - min) / (max - min) * n_bins)``.

    Indices are clamped to ``[0, n_bins - 1]``; a constant source maps every
    value to bin 0.
    """
    v = np.asarray(values, dtype=np.float64).ravel()
    if v.size == 0:
        raise ValueError("cannot quantize an empty sequence")
    lo, hi = q.value_range if q.value_range is not None else (v.min(), v.max())
    if hi <= lo:
        return np.zeros(v.size, dtype=np.int64)
    bins = np.floor((v - lo) / (hi - lo) * q.n_bins).astype(np.int64)
    return np.clip(bins, 0, q.n_bins - 1)


@dataclass(frozen=True)
class JointHistogram:
    """Co-occurrence counts of two discrete sources A (rows) and B (columns)."""

    counts: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.counts)
        if c.ndim != 2:
            raise ValueError("counts must be 2-D")
        if np.any(c < 0):
            raise ValueError("counts must be nonnegative")
        if c.sum() <= 0:
            raise ValueError("joint histogram is empty")
        object.__setattr__(self, "counts", c)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def marginal_a(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def marginal_b(self) -> np.ndarray:
        return self.counts.sum(axis=0)

    def transpose(self) -> "JointHistogram":
        return JointHistogram(self.counts.T)


def joint_histogram(a, b, n_a: Optional[int] = None, n_b: Optional[int] = None) -> JointHistogram:
    """Count pairs ``(a[k], b[k])``; ``n_a``/``n_b`` default to ``max + 1``."""
    a = np.asarray(a, dtype=np.int64).ravel()
    b = np.asarray(b, dtype=np.int64).ravel()
    if a.size != b.size:
        raise ValueError(f"length mismatch: {a.size} vs {b.size}")
    if a.size == 0:
        raise ValueError("cannot histogram empty sequences")
    if a.min() < 0 or b.min() < 0:
        raise ValueError("bin indices must be nonnegative")
    n_a = int(a.max()) + 1 if n_a is None else n_a
    n_b = int(b.max()) + 1 if n_b is None else n_b
    if a.max() >= n_a or b.max() >= n_b:
        raise ValueError("bin index outside the declared range")
    flat = np.bincount(a * n_b + b, minlength=n_a * n_b)
    return JointHistogram(flat.reshape(n_a, n_b))


def _counts(h) -> np.ndarray:
    return np.asarray(h.counts if isinstance(h, JointHistogram) else h, dtype=np.float64)


def _entropy(c: np.ndarray, axes) -> np.ndarray:
    n = c.sum(axis=axes, keepdims=True)
    p = np.divide(c, n, out=np.zeros_like(c), where=c > 0)
    logp = np.log2(p, out=np.zeros_like(p), where=p > 0)
    return -np.sum(p * logp, axis=axes)


def _mi(c: np.ndarray) -> np.ndarray:
    n = c.sum(axis=(-2, -1), keepdims=True)
    ca = c.sum(axis=-1, keepdims=True)
    cb = c.sum(axis=-2, keepdims=True)
    nz = c > 0
    # p(a,b)/(p(a)p(b)) = n c_ab / (c_a c_b)
    ratio = np.divide(n * c, ca * cb, out=np.ones_like(c), where=nz)
    return np.sum(np.where(nz, c / n, 0.0) * np.log2(ratio), axis=(-2, -1))


def _cond(c: np.ndarray) -> np.ndarray:
    """H(A|B) with A on axis -2."""
    n = c.sum(axis=(-2, -1), keepdims=True)
    cb = c.sum(axis=-2, keepdims=True)
    nz = c > 0
    ratio = np.divide(c, cb, out=np.ones_like(c), where=nz)
    return -np.sum(np.where(nz, c / n, 0.0) * np.log2(ratio), axis=(-2, -1))


def entropy(counts) -> float:
    """Shannon entropy in bits of the distribution given by ``counts``.

    Accepts a marginal (1-D) or a joint table, which is treated as the
    distribution over its cells.
    """
    c = _counts(counts).ravel()
    if c.sum() <= 0:
        raise ValueError("entropy of an empty distribution")
    if np.any(c < 0):
        raise ValueError("counts must be nonnegative")
    return float(_entropy(c, -1))


def mutual_information(h: JointHistogram) -> float:
    """``sum p(a,b) log2[p(a,b) / (p(a) p(b))]`` over the nonzero cells."""
    return float(_mi(_counts(h)))


def conditional_entropy(h: JointHistogram, given: Literal["a", "b"] = "b") -> float:
    """H(A|B) when ``given == "b"``, H(B|A) when ``given == "a"``."""
    if given not in ("a", "b"):
        raise ValueError("given must be 'a' or 'b'")
    c = _counts(h)
    return float(_cond(c.T if given == "a" else c))


@dataclass(frozen=True)
class InformationMeasures:
    """Entropies and MI of a stack of joint histograms, one value per table."""

    h_a: np.ndarray
    h_b: np.ndarray
    h_ab: np.ndarray
    mi: np.ndarray
    h_a_given_b: np.ndarray
    h_b_given_a: np.ndarray


def information_measures(counts) -> InformationMeasures:
    """Vectorised measures over ``counts`` of shape ``(..., n_a, n_b)``.

    Computes exactly what the scalar functions compute, for many tables at
    once. Every table must have a positive total.
    """
    c = _counts(counts)
    if c.ndim < 2:
        raise ValueError("counts must have at least 2 dimensions")
    if np.any(c < 0):
        raise ValueError("counts must be nonnegative")
    if np.any(c.sum(axis=(-2, -1)) <= 0):
        raise ValueError("joint histogram is empty")
    return InformationMeasures(
        h_a=_entropy(c.sum(axis=-1), -1),
        h_b=_entropy(c.sum(axis=-2), -1),
        h_ab=_entropy(c, (-2, -1)),
        mi=_mi(c),
        h_a_given_b=_cond(c),
        h_b_given_a=_cond(np.swapaxes(c, -2, -1)),
    )


@dataclass(frozen=True)
class FanoBounds:
    lower: float
    upper: float
    cond_entropy: float
    n_classes: int
    lower_unclamped: float
    upper_unclamped: float

    @property
    def width(self) -> float:
        """Unclamped interval width, always ``1 / log2(n_classes)``."""
        return self.upper_unclamped - self.lower_unclamped


def fano_bounds(cond_entropy_bits: float, n_classes: int) -> FanoBounds:
    """Bounds on the error probability of predicting C from X given H(C|X).

    ``(H - 1) / log2(Nc) <= Pe <= H / log2(Nc)``, clamped to [0, 1]; the raw
    values are kept for diagnostics.
    """
    if n_classes < 2:
        raise ValueError("Fano bounds need at least 2 classes")
    if cond_entropy_bits < 0:
        if cond_entropy_bits < -1e-9:
            raise ValueError("conditional entropy must be nonnegative")
        cond_entropy_bits = 0.0
    log_nc = math.log2(n_classes)
    lo = (cond_entropy_bits - 1.0) / log_nc
    hi = cond_entropy_bits / log_nc
    return FanoBounds(
        lower=min(1.0, max(0.0, lo)),
        upper=min(1.0, max(0.0, hi)),
        cond_entropy=cond_entropy_bits,
        n_classes=n_classes,
        lower_unclamped=lo,
        upper_unclamped=hi,
    )


@dataclass(frozen=True)
class MICurve:
    """Mutual information of each band with a reference map.

    ``values[i]`` belongs to band ``i + 1``.
    """

    values: np.ndarray
    reference: str = "ground truth"

    def __len__(self) -> int:
        return int(self.values.size)

    def __getitem__(self, band: int) -> float:
        """MI of 1-based ``band``."""
        if not 1 <= band <= self.values.size:
            raise IndexError(f"band {band} outside 1..{self.values.size}")
        return float(self.values[band - 1])

    @property
    def bands(self) -> np.ndarray:
        return np.arange(1, self.values.size + 1)

    def ranking(self) -> list[int]:
        """1-based bands by descending MI, lowest index first on ties."""
        order = np.lexsort((np.arange(self.values.size), -self.values))
        return [int(i) + 1 for i in order]


Reference = Union[GroundTruth, BandImage, np.ndarray]


def _discretize_reference(ref: Reference, mask: np.ndarray, q: Quantizer) -> np.ndarray:
    if isinstance(ref, GroundTruth):
        _, codes = np.unique(ref.labels[mask], return_inverse=True)
        return codes.ravel()
    values = ref.values if isinstance(ref, BandImage) else np.asarray(ref)
    values = values[mask]
    if np.issubdtype(values.dtype, np.integer):
        _, codes = np.unique(values, return_inverse=True)
        return codes.ravel()
    return quantize(values, Quantizer(q.n_bins))


def mi_curve(
    cube: HyperCube,
    reference: Reference,
    q: Quantizer = Quantizer(),
    labeled_only: bool = True,
    gt: Optional[GroundTruth] = None,
) -> MICurve:
    """MI in bits between every band of ``cube`` and ``reference``.

    Class labels are used as symbols directly; real-valued maps (e.g. an
    averaged-band image) are quantized with ``q``. With ``labeled_only`` the
    pixels are restricted to the nonzero labels of ``gt`` (which defaults to
    ``reference`` when that is a GroundTruth). Bands are quantized over the
    pixels actually used unless ``q`` pins a range.
    """
    ref_shape = reference.labels.shape if isinstance(reference, GroundTruth) else (
        reference.values.shape if isinstance(reference, BandImage) else np.shape(reference))
    if tuple(ref_shape) != (cube.rows, cube.cols):
        raise ValueError(f"reference is {tuple(ref_shape)}, cube is {(cube.rows, cube.cols)}")
    if gt is None and isinstance(reference, GroundTruth):
        gt = reference
    if labeled_only and gt is not None:
        if gt.labels.shape != (cube.rows, cube.cols):
            raise ValueError("ground truth dimensions do not match the cube")
        mask = gt.labels > 0
    else:
        mask = np.ones((cube.rows, cube.cols), dtype=bool)

    ref_codes = _discretize_reference(reference, mask, q)
    n_ref = int(ref_codes.max()) + 1
    pixels = cube.values[mask]  # (n_pixels, n_bands)
    out = np.empty(cube.n_bands)
    for k in range(cube.n_bands):
        bins = quantize(pixels[:, k], q)
        out[k] = mutual_information(joint_histogram(bins, ref_codes, q.n_bins, n_ref))
    name = "ground truth" if isinstance(reference, GroundTruth) else "reference map"
    return MICurve(out, name)


def write_mi_curve(curve: MICurve, path: Union[str, Path]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["band_index", "mi_bits"])
        for band, v in zip(curve.bands, curve.values):
            w.writerow([int(band), f"{v:.12f}"])


def read_mi_curve(path: Union[str, Path]) -> MICurve:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    bands = [int(r["band_index"]) for r in rows]
    if bands != list(range(1, len(bands) + 1)):
        raise ValueError("band_index column must run 1..n")
    return MICurve(np.array([float(r["mi_bits"]) for r in rows]))


def curve_from_values(values: Sequence[float]) -> MICurve:
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("an MI curve needs at least one band")
    return MICurve(v, "given")
