"""Pixel classification over a band subset.

Two classifiers are provided. ``linear`` is a one-vs-rest ridge classifier
solved in closed form on standardized features, and is the default inside
the wrapper loop. ``knn`` is a 1-nearest-neighbour cross-check. Both are
deterministic.

Models are saved as ``.npz`` archives with a ``format_version`` entry, a
``kind`` string, the 1-based ``bands``, the ``classes``, the standardization
``mean`` and ``scale``, and then either ``weights`` (linear, shape
``(n_bands + 1, n_classes)`` with the intercept in the last row) or
``train_features``/``train_labels`` (knn).
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Protocol, Sequence, Tuple

import numpy as np

from .hypercube import GroundTruth, HyperCube

MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.5
    seed: int = 0
    stratified: bool = True

    def __post_init__(self):
        if not 0 < self.train_fraction < 1:
            raise ValueError("train_fraction must lie in (0, 1)")


@dataclass(frozen=True, eq=False)
class Split:
    """Flat pixel indices of the train and test sides."""

    train: np.ndarray
    test: np.ndarray
    notes: Tuple[str, ...] = ()


def _n_train(n: int, fraction: float) -> int:
    k = int(np.floor(n * fraction + 0.5))
    return min(max(k, 1), n - 1) if n >= 2 else n


def split(gt: GroundTruth, s: SplitSpec = SplitSpec()) -> Split:
    """Disjoint train/test partition of the labeled pixels.

    Stratified splitting draws ``round(n * train_fraction)`` pixels of every
    class, keeping at least one on each side; a class with a single pixel
    goes entirely to training and is noted.
    """
    labels = gt.labels.ravel()
    labeled = np.flatnonzero(labels)
    if labeled.size == 0:
        raise ValueError("no labeled pixels to split")
    counts = np.bincount(labels[labeled])
    if counts.max() < 2:
        raise ValueError("every class has a single pixel; nothing to test on")
    rng = np.random.default_rng(s.seed)
    notes = []
    if s.stratified:
        train, test = [], []
        for c in range(1, counts.size):
            idx = labeled[labels[labeled] == c]
            if idx.size == 0:
                continue
            if idx.size == 1:
                notes.append(f"class {c} has 1 pixel; assigned to training only")
            idx = rng.permutation(idx)
            k = _n_train(idx.size, s.train_fraction)
            train.append(idx[:k])
            test.append(idx[k:])
        tr, te = np.sort(np.concatenate(train)), np.sort(np.concatenate(test))
    else:
        idx = rng.permutation(labeled)
        k = _n_train(idx.size, s.train_fraction)
        tr, te = np.sort(idx[:k]), np.sort(idx[k:])
    for note in notes:
        warnings.warn(note)
    return Split(tr, te, tuple(notes))


@dataclass(frozen=True, eq=False)
class PixelDataset:
    features: np.ndarray        # (n, len(bands)) raw reflectance
    labels: np.ndarray          # (n,) class ids >= 1
    index: np.ndarray           # (n,) flat pixel index, row-major
    bands: Tuple[int, ...]

    def __post_init__(self):
        if self.features.shape != (self.labels.size, len(self.bands)):
            raise ValueError("feature matrix does not match labels x bands")
        if np.any(self.labels < 1):
            raise ValueError("datasets hold labeled pixels only")


def pixel_dataset(cube: HyperCube, gt: GroundTruth, bands: Sequence[int],
                  pixels: np.ndarray) -> PixelDataset:
    bands = tuple(int(b) for b in bands)
    if not bands:
        raise ValueError("empty band subset")
    pixels = np.asarray(pixels)
    return PixelDataset(cube.pixels(bands, pixels), gt.labels.ravel()[pixels], pixels, bands)


@dataclass(frozen=True)
class ClassifierConfig:
    kind: str = "linear"
    regularization: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("linear", "knn"):
            raise ValueError(f"unknown classifier {self.kind!r}; expected linear or knn")
        if self.regularization < 0:
            raise ValueError("regularization must be nonnegative")


class ClassifierModel(Protocol):
    bands: Tuple[int, ...]
    classes: np.ndarray

    def predict(self, features: np.ndarray) -> np.ndarray: ...


def _standardize_stats(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    mean = x.mean(axis=0)
    scale = x.std(axis=0)
    scale[scale == 0] = 1.0
    return mean, scale


@dataclass(frozen=True, eq=False)
class _Standardized:
    bands: Tuple[int, ...]
    classes: np.ndarray
    mean: np.ndarray
    scale: np.ndarray

    def _z(self, features) -> np.ndarray:
        x = np.asarray(features, dtype=np.float64)
        if x.ndim == 1:
            x = x[None, :]
        if x.ndim != 2 or x.shape[1] != len(self.bands):
            raise ValueError(
                f"expected {len(self.bands)} features per pixel, got shape {np.shape(features)}")
        return (x - self.mean) / self.scale


@dataclass(frozen=True, eq=False)
class LinearModel(_Standardized):
    weights: np.ndarray = field(default=None)

    def decision_function(self, features) -> np.ndarray:
        z = self._z(features)
        return z @ self.weights[:-1] + self.weights[-1]

    def predict(self, features) -> np.ndarray:
        # argmax takes the first maximum, i.e. the lowest class id on ties
        return self.classes[np.argmax(self.decision_function(features), axis=1)]


@dataclass(frozen=True, eq=False)
class NearestNeighborModel(_Standardized):
    train_features: np.ndarray = field(default=None)   # standardized, sorted by label
    train_labels: np.ndarray = field(default=None)

    def predict(self, features, chunk: int = 2048) -> np.ndarray:
        z = self._z(features)
        ref = self.train_features
        ref_sq = np.einsum("ij,ij->i", ref, ref)
        out = np.empty(z.shape[0], dtype=self.train_labels.dtype)
        for start in range(0, z.shape[0], chunk):
            q = z[start:start + chunk]
            d = ref_sq[None, :] - 2.0 * q @ ref.T
            out[start:start + chunk] = self.train_labels[np.argmin(d, axis=1)]
        return out


def train(data: PixelDataset, config: ClassifierConfig = ClassifierConfig()) -> ClassifierModel:
    """Fit a classifier; per-band standardization comes from ``data`` only."""
    classes = np.unique(data.labels)
    if classes.size < 2:
        raise ValueError("single class: need at least 2 classes to train")
    x = data.features.astype(np.float64)
    mean, scale = _standardize_stats(x)
    z = (x - mean) / scale
    if config.kind == "knn":
        order = np.argsort(data.labels, kind="stable")
        return NearestNeighborModel(data.bands, classes, mean, scale,
                                    train_features=z[order], train_labels=data.labels[order])
    n, k = z.shape
    targets = np.where(data.labels[:, None] == classes[None, :], 1.0, -1.0)
    a = np.hstack([z, np.ones((n, 1))])
    gram = a.T @ a
    penalty = np.full(k + 1, config.regularization)
    penalty[-1] = 0.0   # intercept is not shrunk
    gram[np.diag_indices_from(gram)] += penalty
    try:
        weights = np.linalg.solve(gram, a.T @ targets)
    except np.linalg.LinAlgError:
        weights = np.linalg.lstsq(gram, a.T @ targets, rcond=None)[0]
    return LinearModel(data.bands, classes, mean, scale, weights=weights)


def predict(model: ClassifierModel, features) -> np.ndarray:
    return model.predict(features)


Trainer = Callable[[PixelDataset], ClassifierModel]


def make_trainer(config: ClassifierConfig = ClassifierConfig()) -> Trainer:
    return lambda data: train(data, config)


def build_estimated_map(cube: HyperCube, gt: GroundTruth, bands: Sequence[int],
                        model: ClassifierModel) -> np.ndarray:
    """Predicted label map over the labeled pixels; 0 everywhere else."""
    bands = tuple(int(b) for b in bands)
    if not bands:
        raise ValueError("empty band subset")
    if bands != tuple(model.bands):
        raise ValueError(f"model was trained on bands {model.bands}, not {bands}")
    idx = gt.labeled_index
    out = np.zeros(gt.labels.size, dtype=np.int64)
    out[idx] = model.predict(cube.pixels(bands, idx))
    return out.reshape(gt.labels.shape)


def save_model(model: ClassifierModel, path) -> None:
    common = dict(format_version=MODEL_FORMAT_VERSION, bands=np.array(model.bands),
                  classes=model.classes, mean=model.mean, scale=model.scale)
    if isinstance(model, LinearModel):
        np.savez(path, kind="linear", weights=model.weights, **common)
    elif isinstance(model, NearestNeighborModel):
        np.savez(path, kind="knn", train_features=model.train_features,
                 train_labels=model.train_labels, **common)
    else:
        raise TypeError(f"cannot save {type(model).__name__}")


def load_model(path) -> ClassifierModel:
    with np.load(Path(path), allow_pickle=False) as z:
        version = int(z["format_version"])
        if version != MODEL_FORMAT_VERSION:
            raise ValueError(f"unsupported model format version {version}")
        common = (tuple(int(b) for b in z["bands"]), z["classes"], z["mean"], z["scale"])
        kind = str(z["kind"])
        if kind == "linear":
            return LinearModel(*common, weights=z["weights"])
        if kind == "knn":
            return NearestNeighborModel(*common, train_features=z["train_features"],
                                        train_labels=z["train_labels"])
    raise ValueError(f"unknown model kind {kind!r}")
