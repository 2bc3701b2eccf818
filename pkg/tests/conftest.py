import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

_ACCEPTANCE_MODULE = "test_acceptance"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion, printed unconditionally."""
    lines = []
    for status in ("passed", "failed", "error", "skipped"):
        for report in terminalreporter.stats.get(status, []):
            if getattr(report, "when", "call") != "call" and status != "error":
                continue
            nodeid = getattr(report, "nodeid", "")
            if _ACCEPTANCE_MODULE not in nodeid:
                continue
            name = nodeid.split("::")[-1].replace("test_", "", 1)
            verdict = {"passed": "PASS", "skipped": "SKIP"}.get(status, "FAIL")
            lines.append(f"ACCEPTANCE {name}: {verdict}")
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
