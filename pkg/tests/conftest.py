import re

_CRITERION = re.compile(r"test_acceptance\.py::test_criterion_(\d+)_(\w+?)(\[.*\])?$")
_results: dict[int, dict] = {}


def pytest_runtest_logreport(report):
    match = _CRITERION.search(report.nodeid)
    if not match or (report.when != "call" and report.passed):
        return
    num = int(match.group(1))
    entry = _results.setdefault(num, {"name": match.group(2), "failed": [], "runs": 0})
    if report.when == "call":
        entry["runs"] += 1
    if report.failed:
        crash = getattr(report.longrepr, "reprcrash", None)
        why = crash.message.splitlines()[0].removeprefix("AssertionError: ") if crash else report.when
        entry["failed"].append(f"{match.group(3) or ''} {why}".strip())


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_results):
        entry = _results[num]
        status = "FAIL" if entry["failed"] else "PASS"
        extra = f" | {' | '.join(entry['failed'])}" if entry["failed"] else ""
        terminalreporter.write_line(f"criterion {num:2d} {entry['name']}: {status}{extra}")
