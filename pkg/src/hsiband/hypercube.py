"""Hyperspectral cubes, ground-truth maps and their on-disk formats.

Band numbers are 1-based wherever a caller sees them; ``values[..., k]``
holds band ``k + 1``.

Cube files are a small ASCII header of ``key=value`` lines next to a
band-sequential raw file of little-endian unsigned 16-bit samples::

    rows=145
    cols=145
    bands=220
    dtype=u16le
    interleave=bsq
    data=92AV3C.raw

Ground truth is either an ASCII grid (one line per row, space-separated
integers) or an 8-bit PGM whose gray levels are the labels.
"""
from __future__ import annotations

import os
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Tuple, Union

import numpy as np

PathLike = Union[str, os.PathLike]

AVIRIS_SHAPE = (145, 145, 220)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class HyperCube:
    """Reflectance cube of shape (rows, cols, n_bands)."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim != 3:
            raise ValueError(f"cube must be 3-D, got shape {v.shape}")
        if min(v.shape) <= 0:
            raise ValueError(f"non-positive cube dimensions {v.shape}")
        object.__setattr__(self, "values", _frozen(v))

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    @property
    def n_bands(self) -> int:
        return self.values.shape[2]

    @property
    def value_range(self) -> Tuple[int, int]:
        return int(self.values.min()), int(self.values.max())

    def band(self, band: int) -> "BandImage":
        """Slice of 1-based ``band``."""
        self._check_band(band)
        return BandImage(self.values[:, :, band - 1])

    def _check_band(self, band: int) -> None:
        if not 1 <= band <= self.n_bands:
            raise ValueError(f"band {band} outside 1..{self.n_bands}")

    def pixels(self, bands, flat_index: np.ndarray) -> np.ndarray:
        """Feature matrix (n_pixels, len(bands)) for 1-based ``bands``."""
        bands = list(bands)
        for b in bands:
            self._check_band(b)
        flat = self.values.reshape(-1, self.n_bands)
        return flat[np.asarray(flat_index)][:, [b - 1 for b in bands]].astype(np.float64)


@dataclass(frozen=True, eq=False)
class GroundTruth:
    """Per-pixel class labels; 0 marks an unlabeled pixel."""

    labels: np.ndarray

    def __post_init__(self):
        lab = np.asarray(self.labels)
        if lab.ndim != 2:
            raise ValueError(f"ground truth must be 2-D, got shape {lab.shape}")
        if not np.issubdtype(lab.dtype, np.integer):
            if not np.all(np.equal(np.mod(lab, 1), 0)):
                raise ValueError("labels must be integers")
        lab = lab.astype(np.int64)
        if lab.min() < 0:
            raise ValueError("negative labels are not allowed")
        if not np.any(lab > 0):
            raise ValueError("no labeled pixels")
        object.__setattr__(self, "labels", _frozen(lab))

    @property
    def rows(self) -> int:
        return self.labels.shape[0]

    @property
    def cols(self) -> int:
        return self.labels.shape[1]

    @property
    def n_classes(self) -> int:
        return int(self.labels.max())

    @property
    def class_counts(self) -> Dict[int, int]:
        counts = np.bincount(self.labels.ravel(), minlength=self.n_classes + 1)
        return {c: int(counts[c]) for c in range(1, self.n_classes + 1)}

    @property
    def n_labeled(self) -> int:
        return int(np.count_nonzero(self.labels))

    @property
    def labeled_index(self) -> np.ndarray:
        """Flat (row-major) indices of labeled pixels."""
        return np.flatnonzero(self.labels.ravel())


@dataclass(frozen=True, eq=False)
class BandImage:
    """One scalar per pixel: a band slice or a derived map."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim != 2:
            raise ValueError("band image must be 2-D")
        object.__setattr__(self, "values", _frozen(v))


def read_header(path: PathLike) -> Dict[str, str]:
    fields = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, value = line.split("=", 1)
            fields[key.strip().lower()] = value.strip()
    return fields


def load_cube(header_path: PathLike) -> HyperCube:
    """Read a BSQ u16 cube described by ``header_path``."""
    header_path = Path(header_path)
    if not header_path.is_file():
        raise FileNotFoundError(f"cube header not found: {header_path}")
    hdr = read_header(header_path)
    missing = {"rows", "cols", "bands", "data"} - hdr.keys()
    if missing:
        raise ValueError(f"{header_path}: missing header keys {sorted(missing)}")
    rows, cols, bands = (int(hdr[k]) for k in ("rows", "cols", "bands"))
    if min(rows, cols, bands) <= 0:
        raise ValueError(f"non-positive cube dimensions {(rows, cols, bands)}")
    if hdr.get("dtype", "u16le").lower() != "u16le":
        raise ValueError(f"unsupported dtype {hdr['dtype']!r}; only u16le is read")
    if hdr.get("interleave", "bsq").lower() != "bsq":
        raise ValueError(f"unsupported interleave {hdr['interleave']!r}; only bsq is read")
    data_path = header_path.parent / hdr["data"]
    if not data_path.is_file():
        raise FileNotFoundError(f"cube data not found: {data_path}")
    raw = np.fromfile(data_path, dtype="<u2")
    expected = rows * cols * bands
    if raw.size != expected or data_path.stat().st_size != 2 * expected:
        raise ValueError(
            f"size mismatch: header {rows}x{cols}x{bands} needs {expected} samples, "
            f"{data_path.name} holds {data_path.stat().st_size / 2:g}")
    if bands == 200:
        warnings.warn("cube has 200 bands: looks like the water-absorption-removed "
                      "AVIRIS variant, band numbers will not match the 220-band layout")
    return HyperCube(raw.reshape(bands, rows, cols).transpose(1, 2, 0).astype(np.uint16))


def write_cube(cube: HyperCube, header_path: PathLike, data_name: str | None = None) -> Path:
    """Write ``cube`` as header + BSQ raw; returns the raw file path."""
    header_path = Path(header_path)
    if cube.values.min() < 0 or cube.values.max() > 65535:
        raise ValueError("cube values do not fit in u16")
    data_name = data_name or header_path.with_suffix(".raw").name
    data_path = header_path.parent / data_name
    cube.values.astype("<u2").transpose(2, 0, 1).tofile(data_path)
    header_path.write_text(
        f"rows={cube.rows}\ncols={cube.cols}\nbands={cube.n_bands}\n"
        f"dtype=u16le\ninterleave=bsq\ndata={data_name}\n")
    return data_path


def _read_pgm(blob: bytes) -> np.ndarray:
    tokens, pos = [], 2
    while len(tokens) < 3:
        while blob[pos:pos + 1].isspace():
            pos += 1
        if blob[pos:pos + 1] == b"#":
            pos = blob.index(b"\n", pos) + 1
            continue
        start = pos
        while not blob[pos:pos + 1].isspace():
            pos += 1
        tokens.append(int(blob[start:pos]))
    width, height, maxval = tokens
    if maxval > 255:
        raise ValueError("only 8-bit PGM label maps are supported")
    if blob[:2] == b"P5":
        data = np.frombuffer(blob, dtype=np.uint8, count=width * height, offset=pos + 1)
    else:
        data = np.array(blob[pos:].split(), dtype=np.int64)
        if data.size != width * height:
            raise ValueError("PGM pixel count does not match its header")
    return data.reshape(height, width).astype(np.int64)


def load_ground_truth(path: PathLike, expected_dims: Tuple[int, int] | None = None) -> GroundTruth:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"ground truth not found: {path}")
    blob = path.read_bytes()
    if blob[:2] in (b"P5", b"P2"):
        labels = _read_pgm(blob)
    else:
        rows = [line.split() for line in blob.decode().splitlines() if line.strip()]
        if len({len(r) for r in rows}) != 1:
            raise ValueError(f"{path}: ragged label grid")
        labels = np.array(rows, dtype=np.int64)
    if expected_dims is not None and labels.shape != tuple(expected_dims):
        raise ValueError(f"ground truth is {labels.shape}, expected {tuple(expected_dims)}")
    return GroundTruth(labels)


def write_ground_truth(gt: GroundTruth, path: PathLike) -> None:
    """ASCII grid writer; the counterpart of :func:`load_ground_truth`."""
    with open(path, "w") as fh:
        for row in gt.labels:
            fh.write(" ".join(str(int(v)) for v in row) + "\n")


def estimate_gt_by_average(cube: HyperCube, band_range: Tuple[int, int] = (170, 210)) -> BandImage:
    """Per-pixel mean of bands ``band_range[0]..band_range[1]`` (inclusive, 1-based).

    The result stays real-valued; it is quantized only when used as an MI
    reference.
    """
    lo, hi = band_range
    if lo > hi:
        raise ValueError(f"empty band range {band_range}")
    if lo < 1 or hi > cube.n_bands:
        raise ValueError(f"band range {band_range} outside 1..{cube.n_bands}")
    return BandImage(cube.values[:, :, lo - 1:hi].astype(np.float64).mean(axis=2))
