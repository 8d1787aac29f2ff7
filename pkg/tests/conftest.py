from __future__ import annotations

import numpy as np
import pytest
from hypothesis import settings

from calderonlab.dyadic import IndexWindow

settings.register_profile("lab", deadline=None, max_examples=40, derandomize=True)
settings.load_profile("lab")

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def base_window() -> IndexWindow:
    return IndexWindow(1, 8, -3, 3, 4)


@pytest.fixture
def small_window() -> IndexWindow:
    return IndexWindow(1, 2, -1, 2, 4)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
