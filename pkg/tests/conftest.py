from collections import defaultdict

import pytest

CRITERIA = {
    1: "theta-averaged distance table within 0.005, under 1 s",
    2: "Hadamard coin entrywise within 1e-12",
    3: "Monte Carlo vs exact within 4 stderr and trace distance < 0.01",
    4: "closed-form endpoints within 1e-12",
    5: "iterated dephasing channel matches exp(-gamma n) within 1e-9",
    6: "CPTP property suite",
    7: "zone normalization 1 +- 1e-6 on side <= 16",
    8: "mixing-time inverse within 1e-9 (per-step)",
    9: "tunable-rate residual <= 1e-10 and no-solution for a in {0.9, 1.0}",
}

_outcomes = defaultdict(list)


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(n): acceptance criterion number")


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("acceptance")
        if m:
            item.user_properties.append(("acceptance", m.args[0]))


@pytest.hookimpl(tryfirst=True)
def pytest_runtest_logreport(report):
    crit = dict(report.user_properties).get("acceptance")
    if crit is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _outcomes[crit].append((report.nodeid.split("::")[-1], report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n, desc in CRITERIA.items():
        res = _outcomes.get(n)
        if not res:
            tr.write_line(f"criterion {n}: NOT RUN  {desc}")
            continue
        failed = [name for name, outcome in res if outcome != "passed"]
        status = "PASS" if not failed else "FAIL"
        detail = f"  ({len(failed)}/{len(res)} failed: {', '.join(failed)})" if failed else ""
        tr.write_line(f"criterion {n}: {status}  {desc}{detail}")
