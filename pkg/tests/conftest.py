from hypothesis import HealthCheck, settings

settings.register_profile("vce", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("vce")


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
