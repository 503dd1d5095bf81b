def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance")
    for n in sorted(module.RESULTS):
        terminalreporter.write_line(module.RESULTS[n])
