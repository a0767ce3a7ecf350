"""
OpenQASM 3 front end.

The supported subset (version header, stdgates include, qubit/bit
declarations, gate applications with constant angle expressions, measure,
def subroutines and calls) is described by a lark grammar. A file is lexed
once, cut into statements at `;` and at balanced braces, and every statement
is parsed on its own, so one pass can report several problems. Names are then
resolved against the declared registers. Anything outside the subset is
reported as QT010. `//%` pragma lines are comments to the grammar; they are
captured from the raw text and attached to the subroutine whose span contains
them.
"""
import math
from typing import Dict, Iterator, List, NamedTuple, Optional, Sequence, Tuple, Union

from lark import Lark, Token, Transformer
from lark.exceptions import UnexpectedCharacters, UnexpectedInput, UnexpectedToken
from loguru import logger

from pragmatest.models import (
    CallStmt,
    Diagnostic,
    GateApplication,
    MeasureStmt,
    Param,
    PragmaLine,
    Program,
    RegisterDecl,
    RegisterRef,
    Statement,
    SubroutineDef,
)
from pragmatest.services.simulator_service import BUILTIN_GATES, GATE_SIGNATURES

SUPPORTED_INCLUDE = "stdgates.inc"
SUBSET_HINT = "construct not in supported subset"

UNSUPPORTED_KEYWORDS = frozenset({
    "for", "while", "if", "else", "switch", "case", "default", "break", "continue", "end", "return",
    "gate", "opaque", "defcal", "defcalgrammar", "cal", "extern", "box", "let", "const", "input", "output",
    "int", "uint", "float", "angle", "bool", "complex", "duration", "stretch", "array",
    "reset", "barrier", "delay", "gphase", "ctrl", "negctrl", "inv", "pow", "qreg", "creg", "pragma",
})

ANGLE_CONSTANTS = {"pi": math.pi, "π": math.pi, "tau": math.tau, "τ": math.tau, "euler": math.e, "ℇ": math.e}

# Every character of the file becomes a token or is ignored. Real terminals
# outrank BAD, so BAD only picks up characters nothing else accepts.
_TOKEN_GRAMMAR = r"""
start: _token*
_token: NAME | NUMBER | STRING | SYMBOL | LBRACE | RBRACE | SEMICOLON | OPEN_COMMENT | BAD

NAME.2: /[^\W\d]\w*/
NUMBER.2: /(\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?/
STRING.2: /"[^"\n]*"/
SYMBOL.2: /->|==|!=|<=|>=|\+\+|[,()\[\]=+\-*\/:<>!&|^%~@.]/
LBRACE.2: "{"
RBRACE.2: "}"
SEMICOLON.2: ";"
COMMENT.3: /\/\/[^\n]*/
BLOCK_COMMENT.3: /\/\*[\s\S]*?\*\//
OPEN_COMMENT.3: "/*"
WS.2: /\s+/
BAD: /./

%ignore WS
%ignore COMMENT
%ignore BLOCK_COMMENT
"""

_STATEMENT_GRAMMAR = r"""
header: "OPENQASM" NUMBER ";"
include: "include" STRING ";"

def_head: "def" NAME "(" [params] ")" [return_type]
params: param ("," param)*
param: type_name [designator] NAME
return_type: "->" type_name [designator]
!type_name: "qubit" | "bit" | NAME

?statement: declaration
          | measure_arrow
          | assignment
          | application

declaration: register_type [designator] NAME [initializer] ";"
!register_type: "qubit" | "bit"
designator: "[" expr "]"
initializer: "=" _value
measure_arrow: "measure" operand "->" operand ";"
assignment: operand "=" _value ";"
_value: measure | expr
measure: "measure" operand
application: NAME [arguments] [operands] ";"
arguments: "(" [expressions] ")"
expressions: expr ("," expr)*
operands: operand ("," operand)*
operand: NAME [index]
index: "[" expr ((":" | ",") expr)* "]"

?expr: sum
?sum: product
    | sum ADD_OP product -> binary
?product: unary
    | product MUL_OP unary -> binary
?unary: atom
      | ADD_OP unary -> signed
?atom: NUMBER -> number
     | NAME -> constant
     | NAME "[" expr "]" -> indexed
     | "(" expr ")"

ADD_OP: "+" | "-"
MUL_OP: "*" | "/"
NAME: /[^\W\d]\w*/
NUMBER: /(\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?/
STRING: /"[^"\n]*"/
COMMENT: /\/\/[^\n]*/
BLOCK_COMMENT: /\/\*[\s\S]*?\*\//
WS: /\s+/

%ignore WS
%ignore COMMENT
%ignore BLOCK_COMMENT
"""

_TOKENIZER = Lark(_TOKEN_GRAMMAR, parser="lalr", lexer="basic")
_PARSER = Lark(
    _STATEMENT_GRAMMAR,
    parser="lalr",
    start=["header", "include", "def_head", "statement"],
    maybe_placeholders=True,
)

_TERMINAL_DESCRIPTIONS = {
    "NAME": "a name",
    "NUMBER": "a number",
    "STRING": "a quoted string",
    "ADD_OP": "'+' or '-'",
    "MUL_OP": "'*' or '/'",
    "$END": "end of statement",
}

# ("number", text) | ("constant", name) | ("indexed", name)
# | ("signed", op, expr) | ("binary", op, lhs, rhs)
Expr = Tuple


class _Operand(NamedTuple):
    name: str
    index: Optional[Tuple[Expr, ...]]


class _Measure(NamedTuple):
    qubits: _Operand


class _Declaration(NamedTuple):
    kind: str
    width: Optional[Expr]
    name: str
    initializer: Optional[Union[_Measure, Expr]]


class _MeasureArrow(NamedTuple):
    qubits: _Operand
    bits: _Operand


class _Assignment(NamedTuple):
    target: _Operand
    value: Union[_Measure, Expr]


class _Application(NamedTuple):
    name: str
    arguments: Optional[List[Expr]]  # None when written without parentheses
    operands: List[_Operand]


class _ParamSyntax(NamedTuple):
    type_name: str
    width: Optional[Expr]
    name: str


class _DefHead(NamedTuple):
    name: str
    params: List[_ParamSyntax]
    returns: bool


class SyntaxBuilder(Transformer):
    """Turns the parse tree of one statement into small syntax records"""

    def header(self, tree: List[Token]) -> str:
        return str(tree[0])

    def include(self, tree: List[Token]) -> str:
        return str(tree[0])[1:-1]

    def def_head(self, tree: List) -> _DefHead:
        name, params, returns = tree
        return _DefHead(str(name), params or [], returns is not None)

    def params(self, tree: List) -> List[_ParamSyntax]:
        return list(tree)

    def param(self, tree: List) -> _ParamSyntax:
        type_name, width, name = tree
        return _ParamSyntax(type_name, width, str(name))

    def return_type(self, tree: List) -> str:
        return tree[0]

    def type_name(self, tree: List[Token]) -> str:
        return str(tree[0])

    register_type = type_name

    def declaration(self, tree: List) -> _Declaration:
        kind, width, name, initializer = tree
        return _Declaration(kind, width, str(name), initializer)

    def designator(self, tree: List) -> Expr:
        return tree[0]

    def initializer(self, tree: List):
        return tree[0]

    def measure(self, tree: List) -> _Measure:
        return _Measure(tree[0])

    def measure_arrow(self, tree: List) -> _MeasureArrow:
        return _MeasureArrow(tree[0], tree[1])

    def assignment(self, tree: List) -> _Assignment:
        return _Assignment(tree[0], tree[1])

    def application(self, tree: List) -> _Application:
        name, arguments, operands = tree
        return _Application(str(name), arguments, operands or [])

    def arguments(self, tree: List) -> List[Expr]:
        return tree[0] or []

    def expressions(self, tree: List) -> List[Expr]:
        return list(tree)

    def operands(self, tree: List) -> List[_Operand]:
        return list(tree)

    def operand(self, tree: List) -> _Operand:
        name, index = tree
        return _Operand(str(name), index)

    def index(self, tree: List) -> Tuple[Expr, ...]:
        return tuple(tree)

    def number(self, tree: List[Token]) -> Expr:
        return ("number", str(tree[0]))

    def constant(self, tree: List[Token]) -> Expr:
        return ("constant", str(tree[0]))

    def indexed(self, tree: List) -> Expr:
        return ("indexed", str(tree[0]))

    def signed(self, tree: List) -> Expr:
        op, operand = tree
        return ("signed", str(op), operand)

    def binary(self, tree: List) -> Expr:
        lhs, op, rhs = tree
        return ("binary", str(op), lhs, rhs)


class _Segment(NamedTuple):
    tokens: List[Token]
    closed: bool  # ended by ';' or by the brace that balances the segment


class _Abort(Exception):
    """Raised inside a statement after its diagnostic has been recorded"""


def _segments(tokens: Sequence[Token]) -> Iterator[_Segment]:
    """Cut a token run at top-level `;` and after each balanced `{...}` block"""
    current: List[Token] = []
    depth = 0
    for token in tokens:
        if depth == 0 and token.type == "RBRACE":
            if current:
                yield _Segment(current, False)
                current = []
            yield _Segment([token], False)
            continue
        current.append(token)
        if token.type == "LBRACE":
            depth += 1
        elif token.type == "RBRACE":
            depth -= 1
            if depth == 0:
                yield _Segment(current, True)
                current = []
        elif token.type == "SEMICOLON" and depth == 0:
            yield _Segment(current, True)
            current = []
    if current:
        yield _Segment(current, False)


def _is_keyword(token: Token, word: str) -> bool:
    return token.type == "NAME" and token.value == word


def _describe_expected(names) -> str:
    described = set()
    for name in names:
        if name in _TERMINAL_DESCRIPTIONS:
            described.add(_TERMINAL_DESCRIPTIONS[name])
            continue
        try:
            described.add(repr(_PARSER.get_terminal(name).pattern.value))
        except KeyError:
            described.add(name.lower())
    return " or ".join(sorted(described)) or "a statement"


def _describe_syntax_error(error: UnexpectedInput) -> Tuple[str, str]:
    if isinstance(error, UnexpectedCharacters):
        return f"unexpected character {error.char!r}", "remove the character"
    expected = f"expected {_describe_expected(getattr(error, 'expected', ()))}"
    if isinstance(error, UnexpectedToken) and error.token.type != "$END":
        return f"unexpected {error.token.value!r}", expected
    return "incomplete statement", expected


def extract_pragma_lines(source: str) -> List[PragmaLine]:
    return [
        PragmaLine(line=number, text=raw.strip())
        for number, raw in enumerate(source.split("\n"), start=1)
        if raw.lstrip().startswith("//%")
    ]


def normalize_newlines(source: str) -> str:
    return source.replace("\r\n", "\n").replace("\r", "\n")


Scope = Dict[str, Tuple[str, int]]
Operand = Union[RegisterRef, str]  # str = whole register


class QasmParser:
    """Parses one file statement by statement and resolves names against declared registers"""

    def __init__(self, source: str, path: str = "<string>"):
        self.source = normalize_newlines(source)
        self.path = path
        self.diagnostics: List[Diagnostic] = []
        self.includes: List[str] = []
        self.gates_enabled = False

    def _error(self, code: str, line: int, message: str, hint: str = "") -> None:
        self.diagnostics.append(Diagnostic(severity="error", code=code, line=line, message=message, hint=hint))

    def _fail(self, code: str, line: int, message: str, hint: str = "") -> None:
        self._error(code, line, message, hint)
        raise _Abort()

    # -- tokens and segments -------------------------------------------

    def _tokens(self) -> List[Token]:
        tokens: List[Token] = []
        for token in _TOKENIZER.parse(self.source).children:
            if token.type == "OPEN_COMMENT":
                self._error("QT000", token.line, "unterminated block comment", "close the comment with */")
                break
            if token.type == "BAD":
                self._error("QT000", token.line, f"unexpected character {token.value!r}", "remove the character")
            tokens.append(token)
        return tokens

    def _parse_segment(self, tokens: Sequence[Token], start: str):
        """Parse the source text spanned by `tokens` from the grammar rule `start`"""
        if any(token.type == "BAD" for token in tokens):
            raise _Abort()
        text = self.source[tokens[0].start_pos:tokens[-1].end_pos]
        try:
            tree = _PARSER.parse(text, start=start)
        except UnexpectedInput as e:
            offset = getattr(e, "line", -1)
            line = tokens[0].line + offset - 1 if isinstance(offset, int) and offset > 0 else tokens[-1].line
            message, hint = _describe_syntax_error(e)
            self._fail("QT000", line, message, hint)
        return SyntaxBuilder().transform(tree)

    # -- program -------------------------------------------------------

    def parse(self) -> Tuple[Program, List[Diagnostic]]:
        segments = list(_segments(self._tokens()))
        version = self._parse_header(segments)
        declarations: List[RegisterDecl] = []
        statements: List[Statement] = []
        subroutines: List[SubroutineDef] = []
        scope: Scope = {}
        for segment in segments:
            first = segment.tokens[0]
            try:
                if _is_keyword(first, "def"):
                    sub = self._parse_def(segment)
                    if any(existing.name == sub.name for existing in subroutines):
                        self._error("QT013", sub.start_line, f"subroutine {sub.name!r} is already defined",
                                    "rename one of the subroutines")
                    else:
                        subroutines.append(sub)
                elif _is_keyword(first, "include"):
                    self._parse_include(segment)
                elif first.type == "RBRACE":
                    self._error("QT000", first.line, "unbalanced braces: unexpected '}'", "remove the extra '}'")
                else:
                    for stmt in self._parse_statement(segment, scope):
                        (declarations if isinstance(stmt, RegisterDecl) else statements).append(stmt)
            except _Abort:
                continue

        pragma_lines = extract_pragma_lines(self.source)
        attached = []
        for sub in subroutines:
            own = tuple(p for p in pragma_lines if sub.start_line <= p.line <= sub.end_line)
            attached.append(SubroutineDef(sub.name, sub.params, sub.body, own, sub.start_line, sub.end_line))
        stray = tuple(
            p for p in pragma_lines
            if not any(sub.start_line <= p.line <= sub.end_line for sub in subroutines)
        )
        program = Program(
            version=version,
            includes=tuple(self.includes),
            declarations=tuple(declarations),
            statements=tuple(statements),
            subroutines=tuple(attached),
            source_path=self.path,
            stray_pragmas=stray,
        )
        for diagnostic in self.diagnostics:
            diagnostic.path = self.path
        self.diagnostics.sort(key=lambda d: d.line)
        return program, self.diagnostics

    def _parse_header(self, segments: List[_Segment]) -> str:
        """Consume the leading version header segment, if there is one"""
        if not segments or not _is_keyword(segments[0].tokens[0], "OPENQASM"):
            line = segments[0].tokens[0].line if segments else 1
            self._error("QT011", line, "missing OPENQASM version header", 'start the file with "OPENQASM 3;"')
            return ""
        header = segments.pop(0)
        line = header.tokens[0].line
        recorded = len(self.diagnostics)
        try:
            version = self._parse_segment(header.tokens, "header")
        except _Abort:
            del self.diagnostics[recorded:]
            self._error("QT011", line, "malformed OPENQASM version header", 'write "OPENQASM 3;"')
            return ""
        if version != "3" and not version.startswith("3."):
            self._error("QT011", line, f"unsupported OpenQASM version {version!r}", 'write "OPENQASM 3;"')
        return version

    def _parse_include(self, segment: _Segment) -> None:
        line = segment.tokens[0].line
        name = self._parse_segment(segment.tokens, "include")
        if name != SUPPORTED_INCLUDE:
            self._fail("QT010", line, f"include of {name!r} is not supported",
                       f'{SUBSET_HINT}; only "{SUPPORTED_INCLUDE}" can be included')
        self.includes.append(name)
        self.gates_enabled = True

    # -- subroutines ---------------------------------------------------

    def _parse_def(self, segment: _Segment) -> SubroutineDef:
        tokens = segment.tokens
        start = tokens[0]
        brace = next((i for i, token in enumerate(tokens) if token.type == "LBRACE"), None)
        if brace is None:
            self._fail("QT000", start.line, "expected '{' after the subroutine header", "add a body in braces")
        if not segment.closed:
            name = tokens[1].value if len(tokens) > 1 and tokens[1].type == "NAME" else "?"
            self._fail("QT000", start.line, f"unbalanced braces: subroutine {name!r} is never closed",
                       "add the missing '}'")

        head: _DefHead = self._parse_segment(tokens[:brace], "def_head")
        if head.name in GATE_SIGNATURES:
            self._fail("QT013", start.line, f"subroutine name {head.name!r} shadows a gate", "rename the subroutine")
        params: List[Param] = []
        scope: Scope = {}
        for param in head.params:
            if param.type_name not in ("qubit", "bit"):
                self._fail("QT010", start.line, f"parameter type {param.type_name!r} is not supported",
                           f"{SUBSET_HINT}; use qubit[n] or bit[n]")
            width = 1 if param.width is None else self._width(param.width, start.line)
            if width < 1:
                self._fail("QT013", start.line, f"parameter {param.name!r} must have width >= 1")
            if param.name in scope:
                self._fail("QT013", start.line, f"duplicate parameter {param.name!r}")
            scope[param.name] = (param.type_name, width)
            params.append(Param(param.name, param.type_name, width))
        if head.returns:
            self._fail("QT010", start.line, "subroutine return values are not supported", SUBSET_HINT)

        body: List[Statement] = []
        for inner in _segments(tokens[brace + 1:-1]):
            first = inner.tokens[0]
            try:
                if _is_keyword(first, "def"):
                    self._fail("QT010", first.line, "nested subroutine definitions are not supported", SUBSET_HINT)
                if _is_keyword(first, "include"):
                    self._fail("QT010", first.line, "include is only allowed at top level", SUBSET_HINT)
                body.extend(self._parse_statement(inner, scope))
            except _Abort:
                continue
        return SubroutineDef(head.name, tuple(params), tuple(body), (), start.line, tokens[-1].line)

    # -- statements ----------------------------------------------------

    def _parse_statement(self, segment: _Segment, scope: Scope) -> List[Statement]:
        first = segment.tokens[0]
        if any(token.type == "BAD" for token in segment.tokens):
            raise _Abort()
        if first.type != "NAME":
            self._fail("QT000", first.line, f"unexpected {first.value!r}", "expected a statement")
        if first.value in UNSUPPORTED_KEYWORDS:
            self._fail("QT010", first.line, f"{first.value!r} is not supported", SUBSET_HINT)

        node = self._parse_segment(segment.tokens, "statement")
        line = first.line
        if isinstance(node, _Declaration):
            return self._declaration(node, scope, line)
        if isinstance(node, _MeasureArrow):
            qubits = self._operand(node.qubits, scope, "qubit", line)
            bits = self._operand(node.bits, scope, "bit", line)
            return [self._pair_measurement(bits, qubits, scope, line)]
        if isinstance(node, _Assignment):
            bits = self._operand(node.target, scope, "bit", line)
            if not isinstance(node.value, _Measure):
                self._fail("QT010", line, "classical assignments are not supported",
                           f"{SUBSET_HINT}; only '= measure ...' is allowed")
            qubits = self._operand(node.value.qubits, scope, "qubit", line)
            return [self._pair_measurement(bits, qubits, scope, line)]
        return self._application(node, scope, line)

    def _declaration(self, node: _Declaration, scope: Scope, line: int) -> List[Statement]:
        width = 1 if node.width is None else self._width(node.width, line)
        if width < 1:
            self._fail("QT013", line, f"register {node.name!r} must have width >= 1")
        if node.name in scope:
            self._fail("QT013", line, f"register {node.name!r} is already declared", "choose a different name")
        if node.name in GATE_SIGNATURES or node.name in ANGLE_CONSTANTS:
            self._fail("QT013", line, f"{node.name!r} is reserved")
        decl = RegisterDecl(node.kind, node.name, width, line)
        scope[decl.name] = (decl.kind, decl.width)
        statements: List[Statement] = [decl]
        if node.initializer is not None:
            if decl.kind != "bit":
                self._fail("QT010", line, "qubit initializers are not supported", SUBSET_HINT)
            if not isinstance(node.initializer, _Measure):
                self._fail("QT010", line, "classical initializers are not supported",
                           f"{SUBSET_HINT}; only '= measure ...' is allowed")
            qubits = self._operand(node.initializer.qubits, scope, "qubit", line)
            statements.append(self._pair_measurement(decl.name, qubits, scope, line))
        return statements

    def _width(self, expr: Expr, line: int) -> int:
        if expr[0] != "number" or not expr[1].isdigit():
            self._fail("QT000", line, "expected a non-negative integer register width")
        return int(expr[1])

    def _application(self, node: _Application, scope: Scope, line: int) -> List[Statement]:
        name = node.name
        if name not in GATE_SIGNATURES:
            if node.arguments is not None and not node.operands:
                return [self._call(node, scope, line)]
            self._fail("QT013", line, f"unknown gate {name!r}", "see the supported gate table")
        if not self.gates_enabled and name not in BUILTIN_GATES:
            self._fail("QT013", line, f"gate {name!r} requires stdgates", f'add include "{SUPPORTED_INCLUDE}";')
        num_qubits, num_params = GATE_SIGNATURES[name]

        angles = [self._angle(expr, line) for expr in node.arguments or []]
        if len(angles) != num_params:
            self._fail("QT013", line, f"gate {name!r} takes {num_params} angle(s), got {len(angles)}")
        operands = [self._operand(op, scope, "qubit", line) for op in node.operands]
        if len(operands) != num_qubits:
            self._fail("QT013", line, f"gate {name!r} acts on {num_qubits} qubit(s), got {len(operands)}")

        widths = {scope[op][1] for op in operands if isinstance(op, str)}
        if len(widths) > 1:
            self._fail("QT013", line, f"broadcast over registers of different widths in {name!r}")
        repeat = widths.pop() if widths else None

        applications: List[Statement] = []
        for i in range(repeat if repeat is not None else 1):
            targets = tuple(RegisterRef(op, i) if isinstance(op, str) else op for op in operands)
            if len(set(targets)) != len(targets):
                self._fail("QT013", line, f"gate {name!r} uses the same qubit twice")
            applications.append(GateApplication(name, tuple(angles), targets, line))
        return applications

    def _call(self, node: _Application, scope: Scope, line: int) -> Statement:
        args: List[str] = []
        for expr in node.arguments:
            if expr[0] not in ("constant", "indexed"):
                self._fail("QT000", line, f"expected a register name as argument to {node.name!r}")
            if expr[1] not in scope:
                self._fail("QT013", line, f"undeclared register {expr[1]!r}", "declare it before the call")
            if expr[0] == "indexed":
                self._fail("QT010", line, "indexed call arguments are not supported",
                           f"{SUBSET_HINT}; pass whole registers")
            args.append(expr[1])
        return CallStmt(node.name, tuple(args), line)

    def _operand(self, node: _Operand, scope: Scope, kind: str, line: int) -> Operand:
        if node.name not in scope:
            self._fail("QT013", line, f"undeclared register {node.name!r}", f"declare it with {kind}[n]")
        reg_kind, width = scope[node.name]
        if reg_kind != kind:
            self._fail("QT013", line, f"{node.name!r} is a {reg_kind} register, expected {kind}")
        if node.index is None:
            return node.name
        if len(node.index) > 1:
            self._fail("QT010", line, "slices and index sets are not supported", SUBSET_HINT)
        expr = node.index[0]
        if expr[0] != "number":
            self._fail("QT010", line, "only constant non-negative indices are supported", SUBSET_HINT)
        if not expr[1].isdigit():
            self._fail("QT000", line, f"expected an index but found {expr[1]!r}")
        index = int(expr[1])
        if index >= width:
            self._fail("QT013", line, f"index {index} out of range for {node.name}[{width}]")
        return RegisterRef(node.name, index)

    def _pair_measurement(self, bits: Operand, qubits: Operand, scope: Scope, line: int) -> MeasureStmt:
        bit_refs = self._expand(bits, scope)
        qubit_refs = self._expand(qubits, scope)
        if len(bit_refs) != len(qubit_refs):
            self._fail("QT013", line, f"measure width mismatch: {len(qubit_refs)} qubit(s) into {len(bit_refs)} bit(s)")
        return MeasureStmt(tuple(bit_refs), tuple(qubit_refs), line)

    @staticmethod
    def _expand(operand: Operand, scope: Scope) -> List[RegisterRef]:
        if isinstance(operand, RegisterRef):
            return [operand]
        return [RegisterRef(operand, i) for i in range(scope[operand][1])]

    # -- angle expressions ---------------------------------------------

    def _angle(self, expr: Expr, line: int) -> float:
        value = self._evaluate(expr, line)
        if not math.isfinite(value):
            self._fail("QT000", line, "angle expression is not a finite number")
        return value

    def _evaluate(self, expr: Expr, line: int) -> float:
        kind = expr[0]
        if kind == "number":
            return float(expr[1])
        if kind in ("constant", "indexed"):
            if kind == "constant" and expr[1] in ANGLE_CONSTANTS:
                return ANGLE_CONSTANTS[expr[1]]
            self._fail("QT010", line, f"{expr[1]!r} is not allowed in an angle",
                       f"{SUBSET_HINT}; use numbers and pi with + - * /")
        if kind == "signed":
            value = self._evaluate(expr[2], line)
            return -value if expr[1] == "-" else value

        _, op, lhs, rhs = expr
        left, right = self._evaluate(lhs, line), self._evaluate(rhs, line)
        if op == "+":
            return left + right
        if op == "-":
            return left - right
        if op == "*":
            return left * right
        if right == 0:
            self._fail("QT000", line, "division by zero in angle expression")
        return left / right


def parse_with_diagnostics(source: str, path: str = "<string>") -> Tuple[Program, List[Diagnostic]]:
    """Parse and return the recovered tree together with every diagnostic"""
    return QasmParser(source, path).parse()


def parse_program(source: str, path: str = "<string>") -> Union[Program, List[Diagnostic]]:
    """Return a Program, or the diagnostics if any error was found"""
    program, diagnostics = parse_with_diagnostics(source, path)
    if any(d.is_error for d in diagnostics):
        logger.debug(f"{path}: {len(diagnostics)} diagnostic(s) while parsing")
        return diagnostics
    return program


def list_tests(program: Program) -> List[SubroutineDef]:
    return [sub for sub in program.subroutines if sub.is_test]
