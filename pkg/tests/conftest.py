import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "scripts"))

# numba compiles lazily, so the first example of a property can be slow
settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

_ACCEPTANCE = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or report.skipped:
        return
    if report.when == "call" or report.failed:
        number, title = marker.args
        ok, _ = _ACCEPTANCE.get(number, (True, title))
        _ACCEPTANCE[number] = (ok and report.passed, title)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        ok, title = _ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {title}")


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture(scope="session")
def desk_images():
    pytest.importorskip("skimage")
    from make_desk_corpus import load_desk_images

    return load_desk_images(512)


@pytest.fixture(scope="session")
def desk_corpus(desk_images, tmp_path_factory):
    from rvfilter.imagecore import save_image

    out = tmp_path_factory.mktemp("desk")
    paths = []
    for name, img in desk_images.items():
        path = out / f"{name}.png"
        save_image(img, path)
        paths.append(path)
    return paths
