import pytest

from usvsim import _kernels


def available_backends():
    backends = [("pure", _kernels.pure)]
    if _kernels.compiled is not None:
        backends.append(("compiled", _kernels.compiled))
    return backends


@pytest.fixture(params=[name for name, _ in available_backends()])
def kernels(request):
    """Run a test against each built kernel backend."""
    return dict(available_backends())[request.param]


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One PASS/FAIL line per acceptance criterion at the end of a run."""
    rows = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py" in nodeid and rep.when in ("call", "setup"):
                name = nodeid.split("::")[-1]
                rows.append((name, "PASS" if outcome == "passed" else "FAIL"))
    if rows:
        terminalreporter.section("acceptance criteria")
        for name, status in rows:
            terminalreporter.write_line(f"{status}  {name}")
