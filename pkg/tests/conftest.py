import pytest

# criterion number -> list of (passed, detail, seconds) filled by test_acceptance
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[n]
        ok = all(p[0] for p in parts)
        secs = sum(p[2] for p in parts)
        detail = "; ".join(p[1] for p in parts)
        tr.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'} ({secs:.1f}s) {detail}")


@pytest.fixture
def record():
    def _record(n, passed, detail, seconds):
        ACCEPTANCE.setdefault(n, []).append((bool(passed), detail, seconds))
        print(f"criterion {n}: {'PASS' if passed else 'FAIL'} ({seconds:.1f}s) {detail}")
    return _record
