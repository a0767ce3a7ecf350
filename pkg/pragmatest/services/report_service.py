"""
Console and JUnit XML renderings of a RunReport.
"""
import os
import re
import xml.etree.ElementTree as ET
from itertools import groupby
from typing import Dict, List

import click
from loguru import logger

from pragmatest.exceptions import UsageError
from pragmatest.models import AssertionResult, ConsoleOptions, RunReport, TestResult

UNICODE_MARKERS = {"pass": "✓", "fail": "✗", "error": "E"}
ASCII_MARKERS = {"pass": "[PASS]", "fail": "[FAIL]", "error": "[ERROR]"}
STATUS_COLORS = {"pass": "green", "fail": "red", "error": "yellow"}

_XML_INVALID = re.compile("[\x00-\x08\x0b\x0c\x0e-\x1f\ufffe\uffff]")


def supports_unicode(encoding: str | None) -> bool:
    try:
        "".join(UNICODE_MARKERS.values()).encode(encoding or "ascii")
    except (LookupError, UnicodeEncodeError):
        return False
    return True


def _style(text: str, status: str, opts: ConsoleOptions, bold: bool = False) -> str:
    return click.style(text, fg=STATUS_COLORS[status], bold=bold) if opts.color else text


def _marker(status: str, opts: ConsoleOptions) -> str:
    markers = UNICODE_MARKERS if opts.unicode else ASCII_MARKERS
    return _style(markers[status], status, opts)


def result_id(result: TestResult) -> str:
    return f"{result.file_path}::{result.test_name}[{result.runtime_label}]"


def _assertion_line(result: AssertionResult, opts: ConsoleOptions) -> str:
    location = f"line {result.line}: " if result.line else ""
    return f"    {_marker(result.status, opts)} {location}assert.{result.kind}: {result.message}"


def render_console(report: RunReport, opts: ConsoleOptions | None = None) -> str:
    """One line per test; failing assertions expanded, or all of them when verbose"""
    opts = opts or ConsoleOptions()
    lines: List[str] = []
    for result in report.results:
        lines.append(f"{_marker(result.status, opts)} {result_id(result)} ({result.duration_seconds:.3f}s)")
        if opts.verbose and result.seed_used is not None:
            lines.append(f"    seed {result.seed_used}")
        if result.message:
            lines.append(f"    {_style('error:', 'error', opts)} {result.message}")
        for assertion in result.assertion_results:
            if opts.verbose or assertion.status != "pass":
                lines.append(_assertion_line(assertion, opts))

    if report.setup_errors:
        lines.append("")
        lines.append("setup errors:")
        lines.extend(f"  {message}" for message in report.setup_errors)

    summary = (
        f"{report.passed} passed, {report.failed} failed, {report.errored} errored "
        f"in {report.wall_clock_seconds:.2f}s (master seed {report.master_seed})"
    )
    status = "pass" if report.ok else ("error" if report.errored and not report.failed else "fail")
    lines.append("")
    lines.append(_style(summary, status, opts, bold=True))
    return "\n".join(lines) + "\n"


def _clean(text: str) -> str:
    return _XML_INVALID.sub("?", text)


def _describe(result: AssertionResult) -> str:
    text = f"assert.{result.kind} (line {result.line}): {result.message}"
    if result.actual is not None or result.expected:
        text += f" [actual: {result.actual}; expected: {result.expected}]"
    return text


def _testcase(parent: ET.Element, result: TestResult) -> None:
    case = ET.SubElement(parent, "testcase", {
        "name": _clean(f"{result.test_name}[{result.runtime_label}]"),
        "classname": _clean(result.file_path),
        "time": f"{result.duration_seconds:.6f}",
    })
    if result.status == "error":
        errors = [r for r in result.assertion_results if r.status == "error"]
        message = result.message or "; ".join(f"assert.{r.kind}: {r.message}" for r in errors)
        element = ET.SubElement(case, "error", {"message": _clean(message)})
        details = [result.message] if result.message else []
        element.text = _clean("\n".join(details + [_describe(r) for r in errors]))
    elif result.status == "fail":
        failures = [r for r in result.assertion_results if r.status == "fail"]
        element = ET.SubElement(case, "failure", {
            "message": _clean(f"{len(failures)} assertion(s) failed: " + ", ".join(f"assert.{r.kind}" for r in failures)),
        })
        element.text = _clean("\n".join(_describe(r) for r in failures))


def _totals(results: List[TestResult]) -> Dict[str, str]:
    return {
        "tests": str(len(results)),
        "failures": str(sum(1 for r in results if r.status == "fail")),
        "errors": str(sum(1 for r in results if r.status == "error")),
        "time": f"{sum(r.duration_seconds for r in results):.6f}",
    }


def render_junit_xml(report: RunReport) -> str:
    root = ET.Element("testsuites", {"name": "pragmatest", **_totals(report.results)})
    root.set("time", f"{report.wall_clock_seconds:.6f}")
    for path, members in groupby(report.results, key=lambda r: r.file_path):
        members = list(members)
        suite = ET.SubElement(root, "testsuite", {"name": _clean(path), **_totals(members)})
        properties = ET.SubElement(suite, "properties")
        ET.SubElement(properties, "property", {"name": "master_seed", "value": str(report.master_seed)})
        for result in members:
            _testcase(suite, result)
    ET.indent(root)
    return '<?xml version="1.0" encoding="UTF-8"?>\n' + ET.tostring(root, encoding="unicode") + "\n"


def check_writable(path: str) -> None:
    """Raise UsageError unless a report can be written to `path`"""
    directory = os.path.dirname(os.path.abspath(path))
    if os.path.isdir(path):
        raise UsageError(f"report destination is a directory: {path}")
    if not os.path.isdir(directory):
        raise UsageError(f"report directory does not exist: {directory}")
    if not os.access(directory, os.W_OK) or (os.path.exists(path) and not os.access(path, os.W_OK)):
        raise UsageError(f"report destination is not writable: {path}")


def write_junit_xml(report: RunReport, path: str) -> None:
    check_writable(path)
    try:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(render_junit_xml(report))
    except OSError as e:
        raise UsageError(f"could not write {path}: {e}") from e
    logger.info(f"Wrote JUnit XML report to {path}")
