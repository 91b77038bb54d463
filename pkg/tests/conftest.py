import pytest

# (criterion, label, passed, detail) lines collected by the acceptance suite
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k, label, ok, detail in sorted(ACCEPTANCE, key=lambda r: (r[0], r[1])):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {k} {label}: {detail}")


@pytest.fixture
def record():
    def _record(k, label, ok, detail=""):
        ACCEPTANCE.append((k, label, bool(ok), detail))
        print(f"{'PASS' if ok else 'FAIL'} criterion {k} {label}: {detail}")
        return bool(ok)
    return _record
