import pytest

from pleatlab.lift import ImplicitOde
from pleatlab.nflab import CUBIC_TEXT, representative_b

ACCEPTANCE_LOG: list[str] = []


def cubic(b: float) -> ImplicitOde:
    return ImplicitOde.from_text(CUBIC_TEXT, {"b": b})


@pytest.fixture(params=sorted(representative_b().items(), key=lambda kv: kv[1]), ids=lambda kv: kv[0])
def case_b(request):
    return request.param


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LOG:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LOG:
            terminalreporter.write_line(line)
