import numpy as np
import pytest
from hypothesis import strategies as st

from ssid import ingest, synth


def make_records(times, srcs=None, dsts=None, lengths=None):
    n = len(times)
    srcs = srcs or ["a"] * n
    dsts = dsts or ["b"] * n
    lengths = lengths or [100] * n
    return [ingest.PacketRecord(i, float(t), s, d, int(ln)) for i, (t, s, d, ln) in enumerate(zip(times, srcs, dsts, lengths))]


@st.composite
def streams(draw, min_size=1, max_size=60, hosts=("a", "b", "c")):
    n = draw(st.integers(min_size, max_size))
    gaps = draw(st.lists(st.floats(0, 5, allow_nan=False), min_size=n, max_size=n))
    times = np.cumsum(gaps) - gaps[0]
    pick = st.sampled_from(hosts)
    srcs = draw(st.lists(pick, min_size=n, max_size=n))
    dsts = draw(st.lists(pick, min_size=n, max_size=n))
    lengths = draw(st.lists(st.integers(0, 1500), min_size=n, max_size=n))
    return make_records(list(times), srcs, dsts, lengths)


@pytest.fixture(scope="session")
def desk_rows():
    return synth.generate(synth.desk_scenario(0))


@pytest.fixture(scope="session")
def desk_records(desk_rows):
    return [ingest.PacketRecord(i, t, s, d, ln) for i, (t, s, d, ln, _) in enumerate(desk_rows)]


@pytest.fixture(scope="session")
def desk_labels(desk_rows):
    return np.array([r[4] for r in desk_rows])


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
