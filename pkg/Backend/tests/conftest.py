import os
from pathlib import Path

import hypothesis
import numpy as np
import pytest

from data_ingest import parse_dataset

np.seterr(all="warn")

hypothesis.settings.register_profile("default", deadline=None, max_examples=100)
hypothesis.settings.register_profile("fast", deadline=None, max_examples=10)
hypothesis.settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "default"))

DATA_DIR = Path(__file__).resolve().parent.parent / "data"


@pytest.fixture
def fig3_path():
    return DATA_DIR / "fig3_example.txt"


@pytest.fixture
def fig3_text(fig3_path):
    return fig3_path.read_text(encoding="utf-8")


@pytest.fixture
def fig3(fig3_text):
    return parse_dataset(fig3_text)
