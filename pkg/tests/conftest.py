from __future__ import annotations

import numpy as np
import pytest

from phasesampling.geometry import CameraProjection, ProjectorProjection


def random_camera(rng: np.random.Generator) -> CameraProjection:
    """Unit-scale camera with a mild perspective row, so depths stay near 1."""
    top = rng.uniform(-1, 1, 8)
    persp = rng.uniform(-0.2, 0.2, 3)
    return CameraProjection(np.concatenate([top, persp]))


def random_projector(rng: np.random.Generator) -> ProjectorProjection:
    return ProjectorProjection(np.concatenate([rng.uniform(-1, 1, 4), rng.uniform(-0.2, 0.2, 3)]))


def random_points(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.uniform(-1, 1, (n, 3))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# ---------------------------------------------------------------- acceptance summary

_CRITERIA: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    props = dict(report.user_properties)
    if "criterion" not in props:
        return
    _CRITERIA[props["criterion"]] = {
        "title": props.get("title", ""),
        "measured": props.get("measured", ""),
        "passed": report.outcome == "passed",
    }


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        c = _CRITERIA[n]
        status = "PASS" if c["passed"] else "FAIL"
        line = f"criterion {n}: {status}  {c['title']}"
        if c["measured"]:
            line += f"  [{c['measured']}]"
        terminalreporter.write_line(line)
