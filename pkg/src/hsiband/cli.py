"""``hsiband`` command line.

Every command reads one ``key=value`` config file (``--config``), accepts
``--set key=value`` overrides, and writes its outputs plus a
``config.resolved.txt`` snapshot into the output directory. Timestamps only
go to ``run.log``. Outputs are staged and moved into place once the command
succeeds; a failed command leaves nothing behind.

Exit codes: 0 success, 1 runtime failure, 2 usage or validation error.
"""
from __future__ import annotations

import argparse
import logging
import shutil
import sys
import tempfile
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import __version__
from .classify import make_trainer
from .config import ConfigError, ExperimentConfig, load_config, require_paths, with_overrides
from .evaluation import classify_bands, table_report, write_map
from .hypercube import estimate_gt_by_average, load_cube, load_ground_truth, write_cube, write_ground_truth
from .infotheory import mi_curve, write_mi_curve
from .selection import (FilterParams, WrapperParams, select_fano, select_filter,
                        threshold_sweep, write_summary_json, write_trace_csv)
from .synthetic import load_synthetic_spec, make_synthetic_cube

log = logging.getLogger("hsiband")


class UsageError(ValueError):
    pass


def _load_data(cfg: ExperimentConfig):
    require_paths(cfg, "cube", "gt")
    cube = load_cube(cfg.cube)
    gt = load_ground_truth(cfg.gt, (cube.rows, cube.cols))
    log.info("cube %dx%dx%d, %d labeled pixels in %d classes",
             cube.rows, cube.cols, cube.n_bands, gt.n_labeled, gt.n_classes)
    return cube, gt


def _check_bands(bands, n_bands: int) -> List[int]:
    bands = [int(b) for b in bands]
    if not bands:
        raise UsageError("band list is empty")
    bad = [b for b in bands if not 1 <= b <= n_bands]
    if bad:
        raise UsageError(f"band(s) {bad} outside 1..{n_bands}")
    if len(set(bands)) != len(bands):
        raise UsageError("band list has duplicates")
    return bands


def cmd_mi_curve(cfg: ExperimentConfig, out: Path) -> None:
    cube, gt = _load_data(cfg)
    curve = mi_curve(cube, gt, cfg.quantizer, cfg.labeled_only)
    write_mi_curve(curve, out / "mi_curve.csv")
    if cfg.band_range is not None:
        ref = estimate_gt_by_average(cube, tuple(cfg.band_range))
        # the averaged map has a value everywhere, so all pixels take part
        est = mi_curve(cube, ref, cfg.quantizer, labeled_only=False)
        write_mi_curve(est, out / "mi_curve_est.csv")


def cmd_select(cfg: ExperimentConfig, out: Path) -> None:
    if cfg.algorithm not in ("filter", "fano"):
        raise UsageError(f"unknown algorithm {cfg.algorithm!r}; expected filter or fano")
    cube, gt = _load_data(cfg)
    curve = mi_curve(cube, gt, cfg.quantizer, cfg.labeled_only)
    X = cfg.X or cube.n_bands
    if cfg.algorithm == "filter":
        result = select_filter(curve, FilterParams(X, cfg.B, cfg.threshold))
    else:
        result = select_fano(cube, gt, WrapperParams(X, cfg.Th, cfg.pe_init),
                             make_trainer(cfg.classifier_config), cfg.split_spec,
                             curve=curve, quantizer=cfg.quantizer)
    log.info("%s selection kept %d bands", cfg.algorithm, len(result.selected))
    write_trace_csv(result, out / "trace.csv")
    write_summary_json(result, out / "summary.json")


def cmd_sweep(cfg: ExperimentConfig, out: Path) -> None:
    cube, gt = _load_data(cfg)
    trainer = make_trainer(cfg.classifier_config)
    curve = mi_curve(cube, gt, cfg.quantizer, cfg.labeled_only)
    report = threshold_sweep(cube, gt, cfg.thresholds, cfg.X or cube.n_bands, trainer,
                             cfg.split_spec, checkpoints=cfg.checkpoints, curve=curve)
    matrices = []
    for th, result in zip(report.thresholds, report.results):
        log.info("Th=%g kept %d bands", th, len(result.selected))
        write_trace_csv(result, out / f"trace_th{th:g}.csv")
        if result.selected:
            cm, _ = classify_bands(cube, gt, result.selected, trainer, cfg.split_spec)
        else:
            raise RuntimeError(f"Th={th:g} accepted no band; no terminal checkpoint to report")
        matrices.append(cm)
    tables = table_report(report, gt, matrices)
    (out / "table_accuracy.csv").write_text(tables["accuracy"].to_csv())
    (out / "table_accuracy.txt").write_text(tables["accuracy"].to_text())
    (out / "table_per_class.csv").write_text(tables["per_class"].to_csv())
    (out / "table_per_class.txt").write_text(tables["per_class"].to_text())


def cmd_classify(cfg: ExperimentConfig, out: Path) -> None:
    if cfg.bands is None:
        raise UsageError("classify needs a band list (--bands or bands=...)")
    cube, gt = _load_data(cfg)
    bands = _check_bands(cfg.bands, cube.n_bands)
    cm, c_est = classify_bands(cube, gt, bands, make_trainer(cfg.classifier_config), cfg.split_spec)
    lines = [f"bands: {','.join(map(str, bands))}",
             f"overall accuracy: {100 * cm.overall_accuracy:.2f}%",
             "class,test_pixels,accuracy_pct,low_confidence"]
    low = set(cm.low_confidence())
    for c, (n, acc) in enumerate(zip(cm.class_totals, cm.per_class_accuracy), 1):
        pct = "-" if np.isnan(acc) else f"{100 * acc:.2f}"
        lines.append(f"{c},{n},{pct},{'yes' if c in low else 'no'}")
    (out / "accuracy.txt").write_text("\n".join(lines) + "\n")
    np.savetxt(out / "confusion.csv", cm.counts, fmt="%d", delimiter=",")
    write_map(gt.labels, out / "gt.ppm")
    write_map(c_est, out / "c_est.ppm")
    print(f"overall accuracy: {100 * cm.overall_accuracy:.2f}%")


def cmd_synth(cfg: ExperimentConfig, out: Path) -> None:
    require_paths(cfg, "synth_spec")
    spec = load_synthetic_spec(cfg.synth_spec)
    cube, gt = make_synthetic_cube(spec, cfg.seed)
    write_cube(cube, out / "cube.hdr")
    write_ground_truth(gt, out / "gt.txt")


COMMANDS = {"mi-curve": cmd_mi_curve, "select": cmd_select, "sweep": cmd_sweep,
            "classify": cmd_classify, "synth": cmd_synth}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hsiband", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("-c", "--config", type=Path, help="key=value config file")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config key (repeatable)")
        p.add_argument("-o", "--output-dir", help="output directory (default: config output_dir)")
        p.add_argument("--seed", type=int, help="override the config seed")
        return p

    add("mi-curve", "MI of every band with the ground truth (mi_curve.csv)")
    p = add("select", "band selection, writes trace.csv and summary.json")
    p.add_argument("--algorithm", help="filter or fano (default: config algorithm)")
    p = add("sweep", "wrapper selection over several thresholds, writes accuracy tables")
    p.add_argument("--thresholds", help="comma-separated Th values")
    p = add("classify", "classify with a fixed band list, writes accuracy and maps")
    p.add_argument("--bands", help="comma-separated 1-based band numbers")
    p = add("synth", "write a synthetic cube + ground truth")
    p.add_argument("--spec", help="synthetic spec file")
    return parser


def _resolve(args) -> ExperimentConfig:
    overrides = list(args.set)
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    for name in ("algorithm", "thresholds", "bands"):
        if getattr(args, name, None):
            overrides.append(f"{name}={getattr(args, name)}")
    cfg = load_config(args.config, overrides, args.output_dir)
    if getattr(args, "spec", None):
        cfg = with_overrides(cfg, synth_spec=Path(args.spec))
    return cfg


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _resolve(args)
    except (ConfigError, ValueError) as exc:
        print(f"hsiband {args.command}: {exc}", file=sys.stderr)
        return 2
    out = Path(cfg.output_dir)
    created = not out.exists()
    out.mkdir(parents=True, exist_ok=True)
    staging = Path(tempfile.mkdtemp(prefix=".staging-", dir=out))
    handler = logging.FileHandler(staging / "run.log")
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.INFO)
    code = 0
    try:
        log.info("hsiband %s %s", args.command, __version__)
        (staging / "config.resolved.txt").write_text(cfg.resolved_text())
        COMMANDS[args.command](cfg, staging)
    except (UsageError, ConfigError) as exc:
        print(f"hsiband {args.command}: {exc}", file=sys.stderr)
        code = 2
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"hsiband {args.command}: {exc}", file=sys.stderr)
        code = 1
    finally:
        log.removeHandler(handler)
        handler.close()
    if code == 0:
        for f in sorted(staging.iterdir()):
            shutil.move(str(f), out / f.name)
    shutil.rmtree(staging, ignore_errors=True)
    if code and created and not any(out.iterdir()):
        out.rmdir()
    return code


if __name__ == "__main__":
    sys.exit(main())
