"""Band selection: MI filter with rejection bandwidth, and the Fano wrapper.

Both selectors return a :class:`SelectionResult` holding the retained bands
(1-based, in selection order) and one trace record per visited candidate.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .classify import (ClassifierConfig, SplitSpec, Trainer, build_estimated_map,
                       make_trainer, pixel_dataset, split)
from .hypercube import GroundTruth, HyperCube
from .infotheory import (MICurve, Quantizer, conditional_entropy, entropy, fano_bounds,
                         joint_histogram, mi_curve)

ACCEPTED = "accepted"
REJECTED = "rejected"


class SelectionError(RuntimeError):
    pass


@dataclass(frozen=True)
class FilterParams:
    X: int
    B: int = 1
    threshold: float = 0.01

    def __post_init__(self):
        if self.X < 1:
            raise ValueError("X must be >= 1")
        if self.B < 0:
            raise ValueError("B must be >= 0")
        if math.isnan(self.threshold):
            raise ValueError("threshold must be a number")


@dataclass(frozen=True)
class WrapperParams:
    X: int
    Th: float = 0.0
    pe_init: Optional[float] = None    # None: Fano upper bound of the majority predictor

    def __post_init__(self):
        if self.X < 1:
            raise ValueError("X must be >= 1")
        if math.isnan(self.Th):
            raise ValueError("Th must be a number")
        if self.pe_init is not None and not 0.0 <= self.pe_init <= 1.0:
            raise ValueError("pe_init must lie in [0, 1]")


@dataclass(frozen=True)
class TraceEntry:
    step: int
    band: int
    mi_bits: float
    decision: str
    reason: str
    pe_before: Optional[float] = None
    pe_after: Optional[float] = None
    pe_lower: Optional[float] = None
    accuracy: Optional[float] = None
    d: Optional[float] = None
    n_selected: int = 0


@dataclass(frozen=True)
class SelectionResult:
    selected: Tuple[int, ...]
    trace: Tuple[TraceEntry, ...]
    params: Dict[str, object] = field(default_factory=dict)

    @property
    def accepted(self) -> List[TraceEntry]:
        return [t for t in self.trace if t.decision == ACCEPTED]

    def summary(self) -> Dict[str, object]:
        return {"params": self.params, "selected": list(self.selected),
                "n_selected": len(self.selected), "n_visited": len(self.trace)}


TRACE_COLUMNS = ["step", "band", "mi_bits", "pe_before", "pe_after", "decision", "reason",
                 "pe_lower", "accuracy", "d", "n_selected"]


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.12f}"
    return str(v)


def write_trace_csv(result: SelectionResult, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for t in result.trace:
            row = asdict(t)
            w.writerow([_fmt(row[c]) for c in TRACE_COLUMNS])


def write_summary_json(result: SelectionResult, path) -> None:
    Path(path).write_text(json.dumps(result.summary(), indent=2, sort_keys=True) + "\n")


# -- MI filter ----------------------------------------------------------------

def select_filter(curve: MICurve, p: FilterParams) -> SelectionResult:
    """Pick bands by descending MI, dropping flat neighbourhoods.

    Each pick ``S`` is the remaining band of highest MI. Its neighbours
    ``N = {S-B..S+B} \\ {S}`` still in the remaining set are discarded when
    the neighbourhood is flat: ``max |MI(n) - MI(n-1)|`` over consecutive
    pairs ``n-1, n`` inside ``N | {S}`` is below the threshold. ``S`` is
    always kept. A threshold below every difference never discards; a huge
    one discards every neighbourhood. Stops at ``X`` bands or when nothing
    remains.
    """
    mi = np.asarray(curve.values, dtype=np.float64)
    n = mi.size
    if n == 0:
        raise ValueError("empty MI curve")
    remaining = set(range(1, n + 1))
    selected: List[int] = []
    trace: List[TraceEntry] = []
    step = 0
    while len(selected) < p.X and remaining:
        s = min(remaining, key=lambda b: (-mi[b - 1], b))
        remaining.discard(s)
        neighbours = sorted(b for b in range(s - p.B, s + p.B + 1) if b != s and b in remaining)
        window = sorted(neighbours + [s])
        inside = set(window)
        diffs = [abs(mi[b - 1] - mi[b - 2]) for b in window if b - 1 in inside]
        d = max(diffs) if diffs else 0.0
        selected.append(s)
        step += 1
        flat = d < p.threshold and bool(neighbours)
        trace.append(TraceEntry(
            step, s, float(mi[s - 1]), ACCEPTED,
            f"max MI in remaining set; d={d:.6g} {'<' if d < p.threshold else '>='} threshold",
            d=float(d), n_selected=len(selected)))
        if flat:
            for b in neighbours:
                remaining.discard(b)
                step += 1
                trace.append(TraceEntry(step, b, float(mi[b - 1]), REJECTED,
                                        f"redundant neighbour of band {s}", d=float(d),
                                        n_selected=len(selected)))
    params = {"algorithm": "filter", "X": p.X, "B": p.B, "threshold": p.threshold,
              "stopped_early": len(selected) < p.X}
    return SelectionResult(tuple(selected), tuple(trace), params)


# -- Fano wrapper -------------------------------------------------------------

def _pe(c_true: np.ndarray, c_est: np.ndarray, n_classes: int):
    h = joint_histogram(c_true, c_est, n_classes + 1, n_classes + 1)
    return fano_bounds(conditional_entropy(h, given="b"), n_classes)


def select_fano(
    cube: HyperCube,
    gt: GroundTruth,
    p: WrapperParams,
    trainer: Optional[Trainer] = None,
    split_spec: SplitSpec = SplitSpec(),
    *,
    curve: Optional[MICurve] = None,
    quantizer: Quantizer = Quantizer(),
) -> SelectionResult:
    """Incremental wrapper selection driven by the Fano error bound.

    Bands are visited by descending MI with the ground truth. A candidate is
    added tentatively, a classifier is trained on the training pixels over
    the tentative set, and the labeled pixels are predicted to form the
    estimated map. ``Pe = H(C | C_est) / log2(Nc)`` is measured on the test
    pixels. The candidate stays only if ``Pe <= Pe* - Th``, in which case
    ``Pe*`` becomes ``Pe``. A negative ``Th`` tolerates increases up to
    ``|Th|``, which in practice lets every visited band through.
    """
    n_classes = gt.n_classes
    present = np.unique(gt.labels[gt.labels > 0])
    if present.size < 2 or n_classes < 2:
        raise ValueError("wrapper selection needs at least 2 classes")
    if (gt.rows, gt.cols) != (cube.rows, cube.cols):
        raise ValueError("ground truth dimensions do not match the cube")
    trainer = trainer or make_trainer(ClassifierConfig())
    curve = curve if curve is not None else mi_curve(cube, gt, quantizer)
    if len(curve) != cube.n_bands:
        raise ValueError("MI curve length does not match the cube")
    sp = split(gt, split_spec)
    c_test = gt.labels.ravel()[sp.test]
    if c_test.size == 0:
        raise ValueError("empty test split")

    if p.pe_init is None:
        pe_star = fano_bounds(entropy(np.bincount(c_test)), n_classes).upper
    else:
        pe_star = p.pe_init
    selected: List[int] = []
    trace: List[TraceEntry] = []
    for step, band in enumerate(curve.ranking(), 1):
        if len(selected) >= p.X:
            break
        trial = selected + [band]
        try:
            model = trainer(pixel_dataset(cube, gt, trial, sp.train))
            c_est = build_estimated_map(cube, gt, trial, model).ravel()[sp.test]
        except Exception as exc:
            raise SelectionError(f"classifier failed while trying band {band}: {exc}") from exc
        fb = _pe(c_test, c_est, n_classes)
        acc = float(np.mean(c_est == c_test))
        pe_before = pe_star
        if fb.upper <= pe_star - p.Th:
            selected.append(band)
            pe_star = fb.upper
            decision, reason = ACCEPTED, "error bound decreased by at least Th"
        else:
            decision, reason = REJECTED, "insufficient decrease"
        trace.append(TraceEntry(step, band, curve[band], decision, reason,
                                pe_before=pe_before, pe_after=fb.upper, pe_lower=fb.lower,
                                accuracy=acc, n_selected=len(selected)))
    params = {"algorithm": "fano", "X": p.X, "Th": p.Th, "pe_init": p.pe_init,
              "pe_init_used": trace[0].pe_before if trace else pe_star,
              "fano_interval_width": 1.0 / math.log2(n_classes),
              "train_fraction": split_spec.train_fraction, "split_seed": split_spec.seed,
              "stratified": split_spec.stratified}
    return SelectionResult(tuple(selected), tuple(trace), params)


@dataclass(frozen=True)
class SweepReport:
    thresholds: Tuple[float, ...]
    results: Tuple[SelectionResult, ...]
    checkpoints: Tuple[int, ...]

    def accuracy_at(self, th_index: int, n_bands: int) -> Optional[float]:
        """Test accuracy once ``n_bands`` bands are accepted, or None if never reached."""
        for t in self.results[th_index].accepted:
            if t.n_selected == n_bands:
                return t.accuracy
        return None

    def matrix(self) -> List[List[Optional[float]]]:
        """Rows = checkpoints, columns = thresholds."""
        return [[self.accuracy_at(j, k) for j in range(len(self.thresholds))]
                for k in self.checkpoints]


def threshold_sweep(
    cube: HyperCube,
    gt: GroundTruth,
    thresholds: Sequence[float],
    X_max: Optional[int] = None,
    trainer: Optional[Trainer] = None,
    split_spec: SplitSpec = SplitSpec(),
    *,
    checkpoints: Optional[Sequence[int]] = None,
    quantizer: Quantizer = Quantizer(),
    curve: Optional[MICurve] = None,
) -> SweepReport:
    """Run the wrapper once per threshold and read accuracy at band-count checkpoints.

    Accuracies come from the accepted steps of each single run. Without
    explicit ``checkpoints`` every count reached by any threshold is listed.
    """
    thresholds = tuple(float(t) for t in thresholds)
    if not thresholds:
        raise ValueError("threshold list is empty")
    X_max = X_max or cube.n_bands
    curve = curve if curve is not None else mi_curve(cube, gt, quantizer)
    results = tuple(select_fano(cube, gt, WrapperParams(X_max, th), trainer, split_spec,
                                curve=curve) for th in thresholds)
    if checkpoints is None:
        reached = max(len(r.selected) for r in results)
        checkpoints = range(1, reached + 1)
    return SweepReport(thresholds, results, tuple(int(k) for k in checkpoints))
