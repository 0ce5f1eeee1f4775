import numpy as np
import pytest

from chanbounds.channels import random_channel
from chanbounds.metrics import ChannelPair


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_pair(rng, n_kraus=2):
    return ChannelPair.from_channels(random_channel(2, 2, n_kraus, rng),
                                     random_channel(2, 2, n_kraus, rng))


ACCEPTANCE = []


def record(number, title, ok, detail):
    """Log one acceptance line and fail the calling test if it did not pass."""
    line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    ACCEPTANCE.append((number, line))
    print(line)
    assert ok, line


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE):
        terminalreporter.write_line(line)
