from __future__ import annotations

import re

import pytest

from textstate.evaluation import bundled_fixtures, load_corpus

_acceptance: dict[str, list[str]] = {}


@pytest.fixture(scope="session")
def corpus():
    return load_corpus()


@pytest.fixture(scope="session")
def reference_fixtures():
    return bundled_fixtures("reference")


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    m = re.search(r"test_criterion_(\d+)", report.nodeid)
    if m:
        _acceptance.setdefault(m.group(1), []).append(report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_acceptance, key=int):
        outcomes = _acceptance[key]
        verdict = "PASS" if all(o == "passed" for o in outcomes) else "FAIL"
        terminalreporter.write_line(f"criterion {key}: {verdict} ({len(outcomes)} check(s))")
