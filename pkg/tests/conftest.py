import os
import sys

sys.path.insert(0, os.path.dirname(__file__))

# Lines recorded by the acceptance suite, echoed after the run so they show
# up even when pytest captures test output.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
