"""Confusion matrices, class-map images and accuracy tables.

Class maps are written as binary PPM (P6). Label 0 is black; labels 1..16 use
the fixed palette in :data:`PALETTE`, and labels above 16 get deterministic
colors from a golden-ratio hue walk.
"""
from __future__ import annotations

import colorsys
import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .hypercube import GroundTruth
from .selection import SweepReport

LOW_CONFIDENCE_TEST_COUNT = 15

PALETTE: Tuple[Tuple[int, int, int], ...] = (
    (0, 0, 0),
    (255, 0, 0), (0, 160, 0), (0, 0, 255), (255, 255, 0),
    (255, 0, 255), (0, 255, 255), (255, 128, 0), (128, 0, 255),
    (128, 255, 0), (0, 128, 255), (255, 0, 128), (0, 255, 128),
    (128, 64, 0), (255, 160, 160), (128, 128, 128), (255, 255, 255),
)


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    """Counts with rows = true class, columns = predicted class (1..Nc)."""

    counts: np.ndarray

    @property
    def n_classes(self) -> int:
        return self.counts.shape[0]

    @property
    def class_totals(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def per_class_accuracy(self) -> np.ndarray:
        """Producer's accuracy; NaN for classes absent from the test set."""
        totals = self.class_totals
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(totals > 0, np.diag(self.counts) / np.maximum(totals, 1), np.nan)

    @property
    def overall_accuracy(self) -> float:
        return float(np.trace(self.counts) / self.counts.sum())

    def low_confidence(self) -> List[int]:
        """Classes whose test count is below the reporting threshold."""
        return [c + 1 for c, n in enumerate(self.class_totals)
                if 0 < n < LOW_CONFIDENCE_TEST_COUNT]


def evaluate(gt: GroundTruth, c_est: np.ndarray, test_pixels: np.ndarray) -> ConfusionMatrix:
    """Confusion matrix of ``c_est`` against ``gt`` on ``test_pixels`` (flat indices)."""
    test_pixels = np.asarray(test_pixels)
    if test_pixels.size == 0:
        raise ValueError("empty test set")
    truth = gt.labels.ravel()[test_pixels]
    if np.any(truth == 0):
        raise ValueError("test pixels must all be labeled")
    pred = np.asarray(c_est).ravel()[test_pixels]
    nc = gt.n_classes
    if pred.min() < 1 or pred.max() > nc:
        raise ValueError("estimated map has predictions outside 1..Nc on test pixels")
    counts = np.bincount((truth - 1) * nc + (pred - 1), minlength=nc * nc).reshape(nc, nc)
    return ConfusionMatrix(counts)


def palette(n_classes: int) -> np.ndarray:
    colors = list(PALETTE[:n_classes + 1])
    k = len(colors)
    while len(colors) < n_classes + 1:
        h = (k * 0.6180339887498949) % 1.0
        r, g, b = colorsys.hsv_to_rgb(h, 0.75, 0.95)
        colors.append((int(r * 255), int(g * 255), int(b * 255)))
        k += 1
    return np.array(colors, dtype=np.uint8)


def render_map(labels: np.ndarray, colors: Optional[np.ndarray] = None) -> bytes:
    """Binary PPM image of a label map."""
    labels = np.asarray(labels)
    if labels.ndim != 2:
        raise ValueError("label map must be 2-D")
    colors = palette(max(int(labels.max()), 16)) if colors is None else np.asarray(colors, np.uint8)
    if labels.min() < 0 or labels.max() >= len(colors):
        raise ValueError(f"label outside palette range 0..{len(colors) - 1}")
    rows, cols = labels.shape
    return f"P6\n{cols} {rows}\n255\n".encode() + colors[labels].tobytes()


def write_map(labels: np.ndarray, path, colors: Optional[np.ndarray] = None) -> None:
    Path(path).write_bytes(render_map(labels, colors))


def read_ppm(blob: bytes) -> np.ndarray:
    """(rows, cols, 3) array from a P6 image written by :func:`render_map`."""
    magic, dims, maxval, rest = blob.split(b"\n", 3)
    if magic != b"P6" or maxval != b"255":
        raise ValueError("not an 8-bit P6 image")
    cols, rows = (int(v) for v in dims.split())
    return np.frombuffer(rest, dtype=np.uint8).reshape(rows, cols, 3)


def _pct(v: Optional[float]) -> str:
    if v is None or (isinstance(v, float) and np.isnan(v)):
        return "-"
    return f"{100.0 * v:.2f}"


def _th(t: float) -> str:
    return f"{t:.3f}".rstrip("0").rstrip(".") if t != int(t) else f"{t:.2f}"


@dataclass(frozen=True)
class Table:
    header: Tuple[str, ...]
    rows: Tuple[Tuple[str, ...], ...]
    title: str = ""

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header)
        w.writerows(self.rows)
        return buf.getvalue()

    def to_text(self) -> str:
        widths = [max(len(r[i]) for r in (self.header,) + self.rows) for i in range(len(self.header))]
        lines = [self.title] if self.title else []
        for r in (self.header,) + self.rows:
            lines.append("  ".join(cell.rjust(w) for cell, w in zip(r, widths)).rstrip())
        return "\n".join(lines) + "\n"


def accuracy_table(report: SweepReport) -> Table:
    """Overall accuracy (%) by retained-band count and threshold."""
    if not report.results:
        raise ValueError("empty sweep")
    header = ("Bands retained",) + tuple(_th(t) for t in report.thresholds)
    rows = tuple((str(k),) + tuple(_pct(v) for v in row)
                 for k, row in zip(report.checkpoints, report.matrix()))
    return Table(header, rows, "Overall accuracy (%) by threshold Th")


def per_class_table(gt: GroundTruth, thresholds: Sequence[float],
                    matrices: Sequence[ConfusionMatrix]) -> Table:
    """Per-class accuracy (%) at each threshold's terminal checkpoint."""
    if not matrices:
        raise ValueError("empty sweep")
    header = ("Class", "Total pixels") + tuple(_th(t) for t in thresholds)
    census = gt.class_counts
    rows = []
    for c in range(1, gt.n_classes + 1):
        rows.append((str(c), str(census[c])) + tuple(_pct(float(m.per_class_accuracy[c - 1]))
                                                    for m in matrices))
    rows.append(("Overall", str(gt.n_labeled)) + tuple(_pct(m.overall_accuracy) for m in matrices))
    return Table(header, tuple(rows), "Per-class accuracy (%) at the last accepted band")


def table_report(report: SweepReport, gt: Optional[GroundTruth] = None,
                 matrices: Optional[Sequence[ConfusionMatrix]] = None) -> Dict[str, Table]:
    """The accuracy-by-count table and, given confusion matrices, the per-class table."""
    if report is None or not report.results:
        raise ValueError("empty sweep")
    out = {"accuracy": accuracy_table(report)}
    if gt is not None and matrices is not None:
        out["per_class"] = per_class_table(gt, report.thresholds, matrices)
    return out


def classify_bands(cube, gt: GroundTruth, bands: Sequence[int], trainer=None,
                   split_spec=None) -> Tuple[ConfusionMatrix, np.ndarray]:
    """Train on ``bands`` over the training split; score the test split.

    Returns the test confusion matrix and the estimated map over all labeled
    pixels.
    """
    from .classify import SplitSpec, build_estimated_map, make_trainer, pixel_dataset, split

    sp = split(gt, split_spec or SplitSpec())
    trainer = trainer or make_trainer()
    model = trainer(pixel_dataset(cube, gt, bands, sp.train))
    c_est = build_estimated_map(cube, gt, bands, model)
    return evaluate(gt, c_est, sp.test), c_est
