"""
Test discovery: walk file and directory arguments for .qasm sources and parse them.
"""
import os
from dataclasses import dataclass, field
from typing import Iterable, List

from loguru import logger

from pragmatest.exceptions import UsageError
from pragmatest.models import Diagnostic, Program
from pragmatest.services.qasm_parser_service import parse_with_diagnostics

QASM_EXTENSION = ".qasm"


@dataclass
class SourceFile:
    """One discovered file with its recovered syntax tree and parse diagnostics"""
    path: str
    program: Program
    diagnostics: List[Diagnostic] = field(default_factory=list)

    @property
    def has_errors(self) -> bool:
        return any(d.is_error for d in self.diagnostics)


def display_path(path: str) -> str:
    """Path relative to the working directory when possible, always with forward slashes"""
    absolute = os.path.abspath(path)
    try:
        relative = os.path.relpath(absolute)
    except ValueError:
        relative = absolute
    if relative.startswith(".."):
        relative = absolute
    return relative.replace(os.sep, "/")


def find_qasm_files(paths: Iterable[str]) -> List[str]:
    found = set()
    for root in paths:
        if not os.path.exists(root):
            raise UsageError(f"path does not exist: {root}")
        if os.path.isfile(root):
            found.add(display_path(root))
            continue
        for directory, subdirs, files in os.walk(root):
            subdirs[:] = [d for d in subdirs if not d.startswith(".")]
            for name in files:
                if name.endswith(QASM_EXTENSION):
                    found.add(display_path(os.path.join(directory, name)))
    return sorted(found)


def load_source(path: str) -> SourceFile:
    try:
        with open(path, "rb") as handle:
            source = handle.read().decode("utf-8-sig")
    except UnicodeDecodeError as e:
        logger.warning(f"{path} is not valid UTF-8: {e}")
        program = Program("", (), (), (), (), path)
        return SourceFile(path, program, [Diagnostic(
            severity="error", code="QT000", line=1, path=path,
            message="file is not valid UTF-8", hint="save the file as UTF-8",
        )])
    program, diagnostics = parse_with_diagnostics(source, path)
    logger.debug(f"Parsed {path}: {len(program.subroutines)} subroutine(s), {len(diagnostics)} diagnostic(s)")
    return SourceFile(path, program, diagnostics)


def discover(paths: Iterable[str]) -> List[SourceFile]:
    """Every .qasm file under the given roots, parsed, in lexicographic path order"""
    files = find_qasm_files(paths)
    logger.info(f"Discovered {len(files)} .qasm file(s)")
    return [load_source(path) for path in files]
