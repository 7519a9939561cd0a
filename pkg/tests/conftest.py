def pytest_terminal_summary(terminalreporter):
    """Repeat the one-line acceptance verdicts printed by the criterion tests."""
    lines = []
    for reports in terminalreporter.stats.values():
        for report in reports:
            if getattr(report, "when", None) != "call" or "test_acceptance" not in getattr(report, "nodeid", ""):
                continue
            lines += [line for line in report.capstdout.splitlines() if line.startswith(("PASS ", "FAIL "))]
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda text: int(text.split()[2])):
            terminalreporter.write_line(line)
