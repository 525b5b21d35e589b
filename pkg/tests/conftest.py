import pytest

# criterion number -> (passed, summary); filled in by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def criterion():
    """Record one acceptance line; the test body sets ``rec.detail``."""

    class Recorder:
        def __init__(self):
            self.number = None
            self.title = ""
            self.detail = ""

        def __call__(self, number, title):
            self.number, self.title = number, title
            return self

    rec = Recorder()
    yield rec


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    rec = item.funcargs.get("criterion") if hasattr(item, "funcargs") else None
    if rec is None or rec.number is None or report.when != "call":
        return
    text = f"{rec.title}: {rec.detail}" if rec.detail else rec.title
    if report.failed:
        msg = str(call.excinfo.value).splitlines()[0] if call.excinfo else ""
        text = f"{text} [{msg[:160]}]" if msg else text
    ACCEPTANCE[rec.number] = (report.passed, text)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, text = ACCEPTANCE[n]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {n:>2}. {text}")
