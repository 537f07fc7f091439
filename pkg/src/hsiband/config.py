"""Flat ``key=value`` experiment configuration.

Relative paths are resolved against the directory of the config file.
Lines starting with ``#`` are comments.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Dict, Iterable, Optional, Tuple

from .classify import ClassifierConfig, SplitSpec
from .infotheory import Quantizer

OUTPUT_DIR_ENV = "HSIBAND_OUTPUT_DIR"


class ConfigError(ValueError):
    pass


def _bool(v: str) -> bool:
    s = v.strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {v!r}")


def _floats(v: str) -> Tuple[float, ...]:
    return tuple(float(x) for x in v.replace(",", " ").split())


def _ints(v: str) -> Tuple[int, ...]:
    return tuple(int(x) for x in v.replace(",", " ").split())


def _opt_float(v: str) -> Optional[float]:
    return None if v.strip().lower() in ("", "none", "auto") else float(v)


def _opt_int(v: str) -> Optional[int]:
    return None if v.strip().lower() in ("", "none", "all") else int(v)


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int
    cube: Optional[Path] = None
    gt: Optional[Path] = None
    output_dir: Path = Path("out")
    bins: int = 256
    labeled_only: bool = True
    classifier: str = "linear"
    regularization: float = 1.0
    train_fraction: float = 0.5
    stratified: bool = True
    algorithm: str = "fano"
    X: Optional[int] = None
    B: int = 1
    threshold: float = 0.01
    Th: float = 0.0
    pe_init: Optional[float] = None
    thresholds: Tuple[float, ...] = (0.0, 0.001, 0.008, 0.015, 0.02, 0.03)
    checkpoints: Optional[Tuple[int, ...]] = None
    band_range: Optional[Tuple[int, int]] = None
    bands: Optional[Tuple[int, ...]] = None
    synth_spec: Optional[Path] = None

    @property
    def quantizer(self) -> Quantizer:
        return Quantizer(self.bins)

    @property
    def classifier_config(self) -> ClassifierConfig:
        return ClassifierConfig(self.classifier, self.regularization, self.seed)

    @property
    def split_spec(self) -> SplitSpec:
        return SplitSpec(self.train_fraction, self.seed, self.stratified)

    def resolved_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ",".join(str(x) for x in v)
            lines.append(f"{f.name}={'' if v is None else v}")
        return "\n".join(lines) + "\n"


_PARSERS = {
    "seed": int, "cube": Path, "gt": Path, "output_dir": Path, "bins": int,
    "labeled_only": _bool, "classifier": str, "regularization": float,
    "train_fraction": float, "stratified": _bool, "algorithm": str,
    "X": _opt_int, "B": int, "threshold": float, "Th": float, "pe_init": _opt_float,
    "thresholds": _floats, "checkpoints": lambda v: _ints(v) or None,
    "band_range": lambda v: _ints(v) or None, "bands": lambda v: _ints(v) or None,
    "synth_spec": Path,
}
_PATH_KEYS = ("cube", "gt", "output_dir", "synth_spec")


def parse_pairs(lines: Iterable[str], source: str = "<config>") -> Dict[str, str]:
    out = {}
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{source}:{lineno}: expected key=value, got {line!r}")
        out[key.strip()] = value.strip()
    return out


def build_config(pairs: Dict[str, str], base_dir: Path = Path("."),
                 output_dir: Optional[str] = None) -> ExperimentConfig:
    """Typed config from raw pairs; ``output_dir`` (CLI flag) beats the env var, which beats the file."""
    pairs = dict(pairs)
    env_out = os.environ.get(OUTPUT_DIR_ENV)
    if env_out:
        pairs["output_dir"] = env_out
    if output_dir:
        pairs["output_dir"] = output_dir
    if "seed" not in pairs:
        raise ConfigError("seed is mandatory")
    kwargs, extra = {}, {}
    for key, raw in pairs.items():
        if key not in _PARSERS:
            extra[key] = raw
            continue
        try:
            value = _PARSERS[key](raw)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {raw!r} ({exc})") from None
        if key in _PATH_KEYS and value is not None and not value.is_absolute():
            # env/flag output dirs are relative to the working directory
            anchor = Path(".") if key == "output_dir" and (env_out or output_dir) else base_dir
            value = anchor / value
        kwargs[key] = value
    if extra:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(extra))}")
    cfg = ExperimentConfig(**kwargs)
    if cfg.band_range is not None and len(cfg.band_range) != 2:
        raise ConfigError("band_range needs two band numbers")
    try:
        cfg.classifier_config, cfg.split_spec, cfg.quantizer
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def load_config(path: Optional[Path], overrides: Iterable[str] = (),
                output_dir: Optional[str] = None) -> ExperimentConfig:
    pairs: Dict[str, str] = {}
    base = Path(".")
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        pairs.update(parse_pairs(path.read_text().splitlines(), str(path)))
        base = path.parent
    pairs.update(parse_pairs(overrides, "--set"))
    return build_config(pairs, base, output_dir)


def require_paths(cfg: ExperimentConfig, *keys: str) -> None:
    for key in keys:
        value = getattr(cfg, key)
        if value is None:
            raise ConfigError(f"config key {key!r} is required for this command")
        if not Path(value).exists():
            raise ConfigError(f"{key} path does not exist: {value}")


def with_overrides(cfg: ExperimentConfig, **kw) -> ExperimentConfig:
    return replace(cfg, **{k: v for k, v in kw.items() if v is not None})
