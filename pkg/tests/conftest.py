import sys
from pathlib import Path

from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", deadline=None, max_examples=50)
settings.load_profile("default")


def pytest_terminal_summary(terminalreporter):
    import acceptance_report

    if acceptance_report.LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(acceptance_report.LINES, key=lambda s: int(s.split()[0][1:])):
            terminalreporter.write_line(line)
