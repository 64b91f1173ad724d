import sys


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Echo the acceptance battery's one-line-per-criterion results after the
    run, outside pytest's capture."""
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "RESULTS", None) if mod is not None else None
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
