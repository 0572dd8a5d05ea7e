from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))  # for `helpers`

from helpers import make_dataset, uniform_counts  # noqa: E402

from qavote.taxonomy import default_rules  # noqa: E402


@pytest.fixture(scope="session")
def rules():
    return default_rules()


@pytest.fixture(scope="session")
def small_dataset():
    """Four questions of every class: 56 items."""
    return make_dataset(uniform_counts(4))
