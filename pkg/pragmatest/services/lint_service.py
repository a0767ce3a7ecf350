"""
Static checks over parsed sources, run without executing any circuit.
"""
from typing import Dict, Iterable, List

from pragmatest.models import (
    CallStmt,
    ConfigDirective,
    Diagnostic,
    GateApplication,
    MeasureStmt,
    Program,
    RegisterRef,
    SubroutineDef,
)
from pragmatest.services.discovery_service import SourceFile
from pragmatest.services.pragma_service import parse_pragmas

SUPPORTED_RUNTIMES = ("native",)


def _diagnostic(severity: str, code: str, line: int, message: str, hint: str = "") -> Diagnostic:
    return Diagnostic(severity=severity, code=code, line=line, message=message, hint=hint)


def check_stray_pragmas(program: Program) -> List[Diagnostic]:
    diagnostics = []
    for pragma in program.stray_pragmas:
        diagnostics.append(_diagnostic(
            "error", "QT001", pragma.line, "directive outside a test subroutine",
            "move it inside a def test*() body",
        ))
    for sub in program.subroutines:
        if sub.is_test:
            continue
        for pragma in sub.pragma_lines:
            diagnostics.append(_diagnostic(
                "error", "QT001", pragma.line, f"directive inside non-test subroutine {sub.name!r}",
                "directives only apply to subroutines whose name starts with 'test'",
            ))
    return diagnostics


def check_duplicate_config(configs: Iterable[ConfigDirective]) -> List[Diagnostic]:
    seen: Dict[str, int] = {}
    diagnostics = []
    for directive in configs:
        if directive.key in seen:
            diagnostics.append(_diagnostic(
                "error", "QT006", directive.line, f"{directive.key!r} is already set on line {seen[directive.key]}",
                "keep a single value per test",
            ))
        else:
            seen[directive.key] = directive.line
    return diagnostics


def check_gate_after_measure(sub: SubroutineDef) -> List[Diagnostic]:
    """Warn on direct gate applications to qubits this body already measured"""
    measured: Dict[RegisterRef, int] = {}
    diagnostics = []
    for stmt in sub.body:
        if isinstance(stmt, MeasureStmt):
            for ref in stmt.qubits:
                measured.setdefault(ref, stmt.line)
        elif isinstance(stmt, GateApplication):
            hit = [ref for ref in stmt.targets if ref in measured]
            if hit:
                diagnostics.append(_diagnostic(
                    "warning", "QT012", stmt.line,
                    f"gate {stmt.gate!r} acts on {hit[0]} after it was measured on line {measured[hit[0]]}",
                    "measurements must come after every gate on that qubit",
                ))
    return diagnostics


def check_calls(program: Program) -> List[Diagnostic]:
    names = {sub.name for sub in program.subroutines}
    bodies = list(program.statements) + [stmt for sub in program.subroutines for stmt in sub.body]
    return [
        _diagnostic("error", "QT013", stmt.line, f"call to undefined subroutine {stmt.callee!r}",
                    "define it with def before running")
        for stmt in bodies
        if isinstance(stmt, CallStmt) and stmt.callee not in names
    ]


def check_test(sub: SubroutineDef) -> List[Diagnostic]:
    diagnostics = []
    if sub.params:
        diagnostics.append(_diagnostic(
            "error", "QT008", sub.start_line, f"test {sub.name!r} must not take parameters",
            "declare registers inside the test body instead",
        ))
    configs, assertions, pragma_diagnostics = parse_pragmas(sub.pragma_lines)
    diagnostics.extend(pragma_diagnostics)
    diagnostics.extend(check_duplicate_config(configs))
    for directive in configs:
        if directive.key == "runtime" and directive.value not in SUPPORTED_RUNTIMES:
            diagnostics.append(_diagnostic(
                "warning", "QT007", directive.line, f"runtime {directive.value!r} is not supported by this build",
                f"supported runtimes: {', '.join(SUPPORTED_RUNTIMES)}",
            ))
    # a malformed assert line is already an error; QT009 is for tests with none at all
    if not assertions and not any("assert." in p.text for p in sub.pragma_lines):
        diagnostics.append(_diagnostic(
            "warning", "QT009", sub.start_line, f"test {sub.name!r} has no assertions",
            "add an //% assert.<kind>: directive",
        ))
    diagnostics.extend(check_gate_after_measure(sub))
    return diagnostics


def lint_program(program: Program) -> List[Diagnostic]:
    diagnostics = check_stray_pragmas(program) + check_calls(program)
    for sub in program.subroutines:
        if sub.is_test:
            diagnostics.extend(check_test(sub))
    return diagnostics


def lint_source(source: SourceFile) -> List[Diagnostic]:
    diagnostics = list(source.diagnostics) + lint_program(source.program)
    for diagnostic in diagnostics:
        diagnostic.path = source.path
    return sorted(diagnostics, key=lambda d: (d.line, d.code))


def lint(sources: Iterable[SourceFile]) -> List[Diagnostic]:
    """Parse diagnostics plus every pragma-level check; never raises"""
    diagnostics: List[Diagnostic] = []
    for source in sources:
        diagnostics.extend(lint_source(source))
    return diagnostics
