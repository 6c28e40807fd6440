import pytest

from cbos.corpus import build_vocab

# Filled by the acceptance tests; echoed after the run so the per-criterion
# verdict lines survive pytest's stdout capture.
GATE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if GATE_LINES:
        terminalreporter.section("acceptance gate")
        for line in GATE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def tiny_vocab():
    """Six words with distinct counts; ids follow descending count."""
    tokens = ["the"] * 6 + ["cat"] * 4 + ["sat"] * 3 + ["on"] * 2 + ["mat"] * 2 + ["a"]
    return build_vocab(tokens, min_count=1)
