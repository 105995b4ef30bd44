import pytest

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}


def _status(passed):
    if isinstance(passed, str):
        return passed
    return "PASS" if passed else "FAIL"


def record(criterion, passed, detail):
    """Store and print one result line; ``passed`` is a bool or a status string."""
    ACCEPTANCE[criterion] = (passed, detail)
    line = f"ACCEPTANCE criterion {criterion}: {_status(passed)} | {detail}"
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=str):
        passed, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key}: {_status(passed)} | {detail}")


@pytest.fixture(scope="session")
def beta3_pod():
    from mdm.integrands import NormModel

    return NormModel(3.0).pod_weights()
