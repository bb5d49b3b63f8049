import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

# (criterion, verdict, detail) lines filled in by test_acceptance.py
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, verdict, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"{verdict}  {name}: {detail}")
