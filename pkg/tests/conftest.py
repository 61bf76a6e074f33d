import sys


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Echo the acceptance verdict lines past output capturing."""
    seen = set()
    for module in list(sys.modules.values()):
        lines = getattr(module, "ACCEPTANCE_VERDICTS", None)
        if not lines or id(lines) in seen:
            continue
        seen.add(id(lines))
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
