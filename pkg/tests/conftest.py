import pytest

_RESULTS: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, part): acceptance criterion this test covers")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, part = mark.args
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        literal_xfail = hasattr(rep, "wasxfail")
        ok = rep.outcome == "passed" and not literal_xfail
        _RESULTS.setdefault(number, []).append((part, ok, literal_xfail))


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_RESULTS):
        parts = _RESULTS[number]
        bad = [p for p, ok, _ in parts if not ok]
        status = "PASS" if not bad else "FAIL"
        line = f"criterion {number:2d}: {status}"
        if bad:
            notes = []
            for p, ok, xf in parts:
                if not ok:
                    notes.append(f"{p} [{'unattainable as stated' if xf else 'failed'}]")
            line += "  " + "; ".join(notes)
            line += f"  ({len(parts) - len(bad)} other parts pass)"
        tr.write_line(line)
