import hypothesis
import pytest

from framer import TagConfig

hypothesis.settings.register_profile("ci", max_examples=300, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=30, deadline=None)
hypothesis.settings.load_profile("ci")

CLASSIC = TagConfig.classic()
TBI = TagConfig.tbi()


@pytest.fixture(params=[CLASSIC, TBI], ids=["spare16", "spare8"])
def cfg(request):
    return request.param

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
