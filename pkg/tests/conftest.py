import os
from pathlib import Path

import numpy as np
import pytest

from hsiband import GroundTruth, HyperCube, SyntheticSpec, load_cube, load_ground_truth, make_synthetic_cube

PLANTED_BANDS = ("informative",) * 3 + ("redundant(1)", "redundant(2)", "redundant(3)") + ("noise",) * 14


@pytest.fixture(scope="session")
def planted():
    """64x64x20, 4 classes: bands 1-3 informative, 4-6 copies of 1-3, 7-20 noise."""
    spec = SyntheticSpec(PLANTED_BANDS, n_classes=4, rows=64, cols=64)
    return make_synthetic_cube(spec, seed=2024)


@pytest.fixture(scope="session")
def small():
    spec = SyntheticSpec(("informative", "noise", "noise", "redundant(1)", "noise"),
                         n_classes=3, rows=32, cols=32)
    return make_synthetic_cube(spec, seed=42)


@pytest.fixture(scope="session")
def two_class():
    # one informative band cannot isolate a middle class under a one-vs-rest
    # linear rule, so the wrapper example uses two classes
    spec = SyntheticSpec(("informative", "noise", "noise", "redundant(1)", "noise"),
                         n_classes=2, rows=32, cols=32)
    return make_synthetic_cube(spec, seed=42)


def _aviris_paths():
    root = Path(os.environ.get("HSIBAND_AVIRIS_DIR", Path(__file__).parent.parent / "data" / "aviris"))
    hdr = root / "92AV3C.hdr"
    for name in ("92AV3C_gt.txt", "92AV3C_gt.pgm"):
        if (root / name).is_file():
            return hdr, root / name
    return hdr, root / "92AV3C_gt.txt"


@pytest.fixture(scope="session")
def aviris():
    hdr, gt_path = _aviris_paths()
    if not (hdr.is_file() and gt_path.is_file()):
        pytest.skip(f"AVIRIS 92AV3C not found ({hdr}, {gt_path}); "
                    "set HSIBAND_AVIRIS_DIR to run the dataset checks")
    cube = load_cube(hdr)
    return cube, load_ground_truth(gt_path, (cube.rows, cube.cols))


# -- acceptance bookkeeping ---------------------------------------------------

_criteria = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or not marker.args:
        return
    name = marker.args[0]
    if report.when == "call" or report.skipped or report.failed:
        status = "PASS" if report.passed else ("SKIP" if report.skipped else "FAIL")
        prev = _criteria.get(name)
        rank = {"FAIL": 2, "SKIP": 1, "PASS": 0}
        if prev is None or rank[status] > rank[prev[0]]:
            reason = ""
            if report.skipped and isinstance(report.longrepr, tuple):
                reason = report.longrepr[2]
            _criteria[name] = (status, reason)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_criteria, key=lambda n: int(n.split()[0][1:])):
        status, reason = _criteria[name]
        line = f"{status}  {name}"
        if reason:
            line += f"  ({reason})"
        terminalreporter.write_line(line)
