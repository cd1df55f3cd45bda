from __future__ import annotations

from importlib import resources

import pytest

from abdgoi.translate import compile_source

SMALL = ["ex1", "ex2", "ex3a", "ex3b", "ex4a", "ex4b", "ex5"]
EXPECTED = {"ex1": 3.0, "ex2": 13.0, "ex3a": 1.0, "ex3b": 2.0, "ex4a": 1.0, "ex4b": 0.0, "ex5": 2.0}
LEARNING = ["ex6a", "ex6b"]


def corpus_source(name: str) -> str:
    return (resources.files("abdgoi") / "corpus" / f"{name}.abd").read_text(encoding="utf-8")


def compile_named(name: str):
    return compile_source(corpus_source(name))


@pytest.fixture(params=SMALL)
def small_program(request):
    return request.param


CRITERIA = {
    1: "example values",
    2: "generated programs terminate",
    3: "determinism",
    4: "gc transparency",
    5: "parameter linearity",
    6: "validity preservation",
    7: "oracle equivalence",
    8: "iterated operations",
    9: "learning demo",
}
_verdicts: dict[int, str] = {}


def _criterion(nodeid: str) -> int | None:
    prefix = "test_acceptance.py::test_criterion_"
    if prefix not in nodeid:
        return None
    return int(nodeid.split(prefix)[1].split("_")[0])


def pytest_runtest_logreport(report):
    n = _criterion(report.nodeid)
    if n is None:
        return
    if report.failed:
        _verdicts[n] = "FAIL"
    elif report.when == "call" and report.passed:
        _verdicts.setdefault(n, "PASS")
    elif report.skipped:
        _verdicts.setdefault(n, "SKIP")


def pytest_terminal_summary(terminalreporter):
    if not _verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for n, what in CRITERIA.items():
        if n in _verdicts:
            terminalreporter.write_line(f"criterion {n} {_verdicts[n]:4} {what}")
