"""
Shared fixtures for the pragmatest test suite
"""
import os

import pytest
from loguru import logger

from pragmatest.models import Circuit, Counts, Program
from pragmatest.services.discovery_service import SourceFile, load_source
from pragmatest.services.qasm_parser_service import parse_program, parse_with_diagnostics
from pragmatest.services.simulator_service import SimulatorService, operation

FIXTURES_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "fixtures")

PASSING_FIXTURES = [
    "assertions.qasm",
    "bell_test.qasm",
    "deterministic.qasm",
    "nested_calls.qasm",
    "noisy_bell.qasm",
]

HEADER = 'OPENQASM 3;\ninclude "stdgates.inc";\n'


def fixture_path(name: str) -> str:
    return os.path.join(FIXTURES_DIR, name)


def read_fixture(name: str) -> str:
    with open(fixture_path(name), encoding="utf-8") as handle:
        return handle.read()


def parse_ok(source: str, path: str = "<test>") -> Program:
    result = parse_program(source, path)
    assert not isinstance(result, list), [d.format() for d in result]
    return result


def source_file(source: str, path: str = "inline.qasm") -> SourceFile:
    program, diagnostics = parse_with_diagnostics(source, path)
    return SourceFile(path, program, diagnostics)


def counts(entries: dict) -> Counts:
    return Counts(entries=entries, shots=sum(entries.values()))


@pytest.fixture(autouse=True)
def isolated_environment(tmp_path, monkeypatch):
    """Keep probe records and settings away from the real working directory"""
    monkeypatch.setenv("PRAGMATEST_HOME", str(tmp_path / ".qutest"))
    for name in ("NO_COLOR", "PRAGMATEST_RUNTIME", "PRAGMATEST_JOBS", "PRAGMATEST_LOG_LEVEL"):
        monkeypatch.delenv(name, raising=False)
    yield
    # sinks added by the CLI point at streams that are closed after each test
    logger.remove()


@pytest.fixture
def write_qasm(tmp_path):
    """Write a .qasm file under tmp_path and return its path"""
    def _write(name: str, source: str) -> str:
        path = tmp_path / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(source, encoding="utf-8")
        return str(path)
    return _write


@pytest.fixture
def simulator():
    return SimulatorService()


@pytest.fixture
def bell_circuit():
    return Circuit(
        2,
        (
            operation("h", 0),
            operation("cx", 0, 1),
            operation("measure", 0, clbit=0),
            operation("measure", 1, clbit=1),
        ),
        2,
        {0: 0, 1: 1},
    )


@pytest.fixture
def bell_source():
    return load_source(fixture_path("bell_test.qasm"))
