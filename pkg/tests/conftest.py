"""Shared fixtures; also puts ``src/`` on the import path for uninstalled runs."""

from __future__ import annotations

import sys
from pathlib import Path

import pytest

PROJECT_ROOT = Path(__file__).resolve().parent.parent
SRC_PATH = PROJECT_ROOT / "src"
if str(SRC_PATH) not in sys.path:
    sys.path.insert(0, str(SRC_PATH))

from nematicflow.core.types import LeslieParams  # noqa: E402


@pytest.fixture
def params() -> LeslieParams:
    """Material constants with ``g = h = 1``, ``K1 = 1`` and ``K3 = 4``."""

    return LeslieParams.special()
