import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from dstok.core import TokenStream


def random_two_stream(rng, utt_id, frames, va, vb, rate=50):
    a = rng.integers(0, va, frames)
    b = rng.integers(0, vb, frames)
    return TokenStream(utt_id, rate, (va, vb), np.stack([a, b], axis=1))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
