"""Seeded synthetic cubes with planted band structure.

Each band is one of

* ``informative``: class-dependent mean plus Gaussian noise,
* ``redundant(k)``: a copy of band ``k`` (1-based) plus a little extra noise,
* ``noise``: Gaussian noise independent of the labels.

Spec files are ``key=value`` text, e.g.::

    rows=64
    cols=64
    n_classes=4
    bands=informative,noise,noise,redundant(1),noise
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Tuple

import numpy as np

from .hypercube import GroundTruth, HyperCube

_REDUNDANT = re.compile(r"^redundant\((\d+)\)$")
MAX_RETRIES = 5


class UnsatisfiableSpec(ValueError):
    pass


@dataclass(frozen=True)
class SyntheticSpec:
    bands: Tuple[str, ...]
    n_classes: int = 3
    rows: int = 32
    cols: int = 32
    tile: int = 4                   # label patches are tile x tile squares
    unlabeled_fraction: float = 0.25
    separation: float = 2.5         # spacing of class means, in noise sigmas
    redundant_noise: float = 0.25   # extra noise of redundant copies, in sigmas
    base: float = 3000.0
    scale: float = 250.0            # reflectance units per sigma

    def __post_init__(self):
        object.__setattr__(self, "bands", tuple(b.strip().lower() for b in self.bands))
        if self.n_classes < 2:
            raise UnsatisfiableSpec(
                f"unsatisfiable: {self.n_classes} class(es), MI against constant labels is zero")
        if not self.bands:
            raise UnsatisfiableSpec("unsatisfiable: no bands")
        if self.rows <= 0 or self.cols <= 0 or self.tile <= 0:
            raise UnsatisfiableSpec("unsatisfiable: non-positive geometry")
        if not 0 <= self.unlabeled_fraction < 1:
            raise UnsatisfiableSpec("unlabeled_fraction must be in [0, 1)")
        for i, kind in enumerate(self.bands, 1):
            src = self.source_of(i)
            if kind in ("informative", "noise"):
                continue
            if src is None:
                raise UnsatisfiableSpec(f"band {i}: unknown kind {kind!r}")
            if not 1 <= src <= len(self.bands) or _REDUNDANT.match(self.bands[src - 1]):
                raise UnsatisfiableSpec(f"band {i}: {kind} must copy an informative or noise band")
        n_tiles = -(-self.rows // self.tile) * -(-self.cols // self.tile)
        if round(n_tiles * (1 - self.unlabeled_fraction)) < self.n_classes:
            raise UnsatisfiableSpec("unsatisfiable: too few labeled tiles for every class")

    def source_of(self, band: int):
        m = _REDUNDANT.match(self.bands[band - 1])
        return int(m.group(1)) if m else None

    def indices(self, kind: str) -> list[int]:
        if kind == "redundant":
            return [i for i in range(1, len(self.bands) + 1) if self.source_of(i)]
        return [i for i, k in enumerate(self.bands, 1) if k == kind]


def parse_synthetic_spec(text: str) -> SyntheticSpec:
    fields = {}
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"expected key=value, got {line!r}")
        fields[key.strip()] = value.strip()
    if "bands" not in fields:
        raise ValueError("synthetic spec needs a 'bands' list")
    kwargs = {"bands": tuple(b for b in re.split(r",(?![^(]*\))", fields.pop("bands")) if b.strip())}
    types = {"n_classes": int, "rows": int, "cols": int, "tile": int,
             "unlabeled_fraction": float, "separation": float,
             "redundant_noise": float, "base": float, "scale": float}
    for key, value in fields.items():
        if key not in types:
            raise ValueError(f"unknown synthetic spec key {key!r}")
        kwargs[key] = types[key](value)
    return SyntheticSpec(**kwargs)


def load_synthetic_spec(path) -> SyntheticSpec:
    return parse_synthetic_spec(Path(path).read_text())


def _labels(spec: SyntheticSpec, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """Tile-patch labels, plus the hidden material class of every pixel."""
    tr, tc = -(-spec.rows // spec.tile), -(-spec.cols // spec.tile)
    n_tiles = tr * tc
    n_labeled = int(round(n_tiles * (1 - spec.unlabeled_fraction)))
    labeled = np.zeros(n_tiles, dtype=bool)
    labeled[rng.permutation(n_tiles)[:n_labeled]] = True
    material = rng.integers(1, spec.n_classes + 1, n_tiles)
    # cycling classes over the labeled tiles guarantees every class a census
    material[labeled] = rng.permutation(np.arange(n_labeled) % spec.n_classes + 1)
    up = np.ones((spec.tile, spec.tile), dtype=np.int64)
    hidden = np.kron(material.reshape(tr, tc), up)[:spec.rows, :spec.cols]
    mask = np.kron(labeled.reshape(tr, tc).astype(np.int64), up)[:spec.rows, :spec.cols]
    return hidden * mask, hidden


def _linear_accuracy(x: np.ndarray, y: np.ndarray, n_classes: int) -> float:
    """Training accuracy of a least-squares one-vs-rest fit."""
    a = np.hstack([x, np.ones((y.size, 1))])
    t = np.where(y[:, None] == np.arange(n_classes), 1.0, -1.0)
    w = np.linalg.lstsq(a, t, rcond=None)[0]
    return float(np.mean(np.argmax(a @ w, axis=1) == y))


def _design_score(levels: np.ndarray, separation: float, rng: np.random.Generator,
                  per_class: int = 200) -> Tuple[float, float]:
    """(accuracy with all bands, smallest accuracy loss from dropping one band)."""
    n_inf, n_classes = levels.shape
    y = np.repeat(np.arange(n_classes), per_class)
    x = separation * levels.T[y] + rng.standard_normal((y.size, n_inf))
    full = _linear_accuracy(x, y, n_classes)
    if n_inf == 1:
        return full, full
    loss = min(full - _linear_accuracy(np.delete(x, j, axis=1), y, n_classes)
               for j in range(n_inf))
    return full, loss


def _class_levels(n_classes: int, n_informative: int, separation: float,
                  rng: np.random.Generator) -> np.ndarray:
    """Per-class mean level of each informative band, (n_informative, n_classes).

    Levels are permutations of 0..Nc-1. Some draws leave a class hidden
    between the others where a one-vs-rest linear rule cannot isolate it,
    and some make one informative band a near-echo of the rest. Among a
    batch of draws, those within a point of the best joint accuracy compete
    on how much the least useful band still adds.
    """
    if n_informative == 0:
        return np.zeros((0, n_classes))
    draws = []
    for _ in range(32):
        levels = np.array([rng.permutation(n_classes) for _ in range(n_informative)], dtype=float)
        draws.append((levels, *_design_score(levels, separation, rng)))
    top = max(full for _, full, _ in draws)
    return max((d for d in draws if d[1] >= top - 0.01), key=lambda d: d[2])[0]


def _generate(spec: SyntheticSpec, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    labels, hidden = _labels(spec, rng)
    inf = spec.indices("informative")
    levels = _class_levels(spec.n_classes, len(inf), spec.separation, rng)
    n_bands = len(spec.bands)
    latent = np.zeros((spec.rows, spec.cols, n_bands))
    spread = spec.separation * np.std(np.arange(spec.n_classes))
    for j, band in enumerate(inf):
        mean = spec.separation * levels[j][hidden - 1]
        latent[:, :, band - 1] = mean + rng.standard_normal(hidden.shape)
    for band in spec.indices("noise"):
        # matched overall spread so noise bands are not trivially different
        latent[:, :, band - 1] = spread * rng.standard_normal(hidden.shape) \
            + spec.separation * (spec.n_classes - 1) / 2
    for band in spec.indices("redundant"):
        src = spec.source_of(band)
        latent[:, :, band - 1] = latent[:, :, src - 1] \
            + spec.redundant_noise * rng.standard_normal(hidden.shape)
    values = np.rint(spec.base + spec.scale * latent)
    return np.clip(values, 0, 65535).astype(np.uint16), labels


def make_synthetic_cube(spec: SyntheticSpec, seed: int) -> Tuple[HyperCube, GroundTruth]:
    """Deterministic cube + ground truth for ``spec`` and ``seed``.

    After generation the informative bands must have strictly larger MI with
    the labels than every noise band; otherwise the noise is redrawn, at most
    ``MAX_RETRIES`` times.
    """
    from .infotheory import mi_curve

    inf, noise = spec.indices("informative"), spec.indices("noise")
    for attempt in range(MAX_RETRIES + 1):
        rng = np.random.default_rng([seed, attempt])
        values, labels = _generate(spec, rng)
        cube, gt = HyperCube(values), GroundTruth(labels)
        if not inf or not noise:
            return cube, gt
        curve = mi_curve(cube, gt)
        if min(curve[b] for b in inf) > max(curve[b] for b in noise):
            return cube, gt
    raise UnsatisfiableSpec(
        f"informative bands did not beat noise bands after {MAX_RETRIES} retries; "
        "increase separation or the number of pixels")
