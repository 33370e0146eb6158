import pytest

_ACCEPTANCE = []


@pytest.fixture
def record():
    """Log one acceptance line: ``record(criterion, label, passed, detail)``."""

    def _record(criterion, label, passed, detail=""):
        _ACCEPTANCE.append((criterion, label, bool(passed), detail))
        return bool(passed)

    return _record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for crit, label, ok, detail in sorted(_ACCEPTANCE, key=lambda r: r[0]):
        tr.write_line(f"{'PASS' if ok else 'FAIL'}  [{crit:>2}] {label}: {detail}")
    n_ok = sum(r[2] for r in _ACCEPTANCE)
    tr.write_line(f"{n_ok}/{len(_ACCEPTANCE)} acceptance checks passed")
