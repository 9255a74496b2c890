import math

import pytest

from mzi_tripwire.detection import DetectorModel
from mzi_tripwire.interferometer import DetectorWindow, PerimeterGeometry, TripwireModel
from mzi_tripwire.source import SourceParams


@pytest.fixture
def source():
    # 400 nm pump, sigma = 10 cycles/ns, no crystal term: beta = 0.01 ns^2, sqrt(beta) = 0.1 ns
    return SourceParams(pump_wavelength=400.0, idler_bandwidth=10.0)


@pytest.fixture
def beta(source):
    return source.beta


@pytest.fixture
def window(source):
    return DetectorWindow(source.sqrt_beta)


@pytest.fixture
def geometry():
    return PerimeterGeometry.square(1.0)


@pytest.fixture
def model(source, geometry):
    return TripwireModel(source, geometry)


@pytest.fixture
def detector(window):
    return DetectorModel(window)


@pytest.fixture
def full_window():
    return DetectorWindow(math.inf)


def binomial_sigma(p, n):
    return math.sqrt(max(p * (1 - p), 0.0) / n)


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed"):
        for report in terminalreporter.stats.get(outcome, []):
            lines += [value for key, value in getattr(report, "user_properties", ()) if key == "criterion"]
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.line(line)
