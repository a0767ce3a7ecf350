"""
Inlining of subroutine calls and lowering of the flat body to a Circuit.

Calls are expanded depth-first, left to right, by rewriting formal register
names to the caller's actual registers (`q[i]` -> `r[i]`). Registers declared
inside a callee are hoisted into the test's register table under their own
names; a clash with an existing register is an error rather than a rename.
"""
from typing import Dict, List, Tuple

from loguru import logger

from pragmatest.exceptions import CircuitError, InlineError
from pragmatest.models import (
    CallStmt,
    Circuit,
    FlatBody,
    GateApplication,
    MeasureStmt,
    Operation,
    Program,
    RegisterDecl,
    RegisterKind,
    RegisterRef,
    Statement,
    SubroutineDef,
)
from pragmatest.services.simulator_service import GATE_SIGNATURES

RegisterTable = Dict[str, Tuple[RegisterKind, int]]


class _Expander:
    def __init__(self, program: Program):
        self.program = program
        self.table: RegisterTable = {}
        self.statements: List[Statement] = []

    def declare(self, name: str, kind: RegisterKind, width: int, owner: str) -> None:
        if name in self.table:
            raise InlineError(
                f"register {name!r} declared in {owner!r} collides with an existing register; rename it"
            )
        self.table[name] = (kind, width)

    def expand(self, sub: SubroutineDef, binding: Dict[str, str], stack: Tuple[str, ...]) -> None:
        for stmt in sub.body:
            if isinstance(stmt, RegisterDecl):
                self.declare(stmt.name, stmt.kind, stmt.width, sub.name)
                binding[stmt.name] = stmt.name
                self.statements.append(stmt)
            elif isinstance(stmt, GateApplication):
                targets = tuple(_rebind(ref, binding) for ref in stmt.targets)
                self.statements.append(GateApplication(stmt.gate, stmt.angles, targets, stmt.line))
            elif isinstance(stmt, MeasureStmt):
                self.statements.append(MeasureStmt(
                    tuple(_rebind(ref, binding) for ref in stmt.bits),
                    tuple(_rebind(ref, binding) for ref in stmt.qubits),
                    stmt.line,
                ))
            elif isinstance(stmt, CallStmt):
                self.expand_call(stmt, binding, stack)

    def expand_call(self, call: CallStmt, binding: Dict[str, str], stack: Tuple[str, ...]) -> None:
        callee = self.program.subroutine(call.callee)
        if callee is None:
            raise InlineError(f"line {call.line}: call to undefined subroutine {call.callee!r}")
        if callee.name in stack:
            chain = " -> ".join(stack + (callee.name,))
            raise InlineError(f"recursion not supported: {chain}")
        if len(call.args) != len(callee.params):
            raise InlineError(
                f"line {call.line}: {callee.name!r} takes {len(callee.params)} argument(s), got {len(call.args)}"
            )
        inner: Dict[str, str] = {}
        for arg, param in zip(call.args, callee.params):
            actual = binding.get(arg)
            if actual is None:
                raise InlineError(f"line {call.line}: undeclared register {arg!r}")
            kind, width = self.table[actual]
            if kind != param.kind or width != param.width:
                raise InlineError(
                    f"line {call.line}: argument {arg!r} is {kind}[{width}] "
                    f"but {callee.name!r} expects {param.kind}[{param.width}] {param.name}"
                )
            inner[param.name] = actual
        self.expand(callee, inner, stack + (callee.name,))


def _rebind(ref: RegisterRef, binding: Dict[str, str]) -> RegisterRef:
    if ref.register not in binding:
        raise InlineError(f"register {ref.register!r} is not visible here")
    return RegisterRef(binding[ref.register], ref.index)


def _measurement_map(body: FlatBody) -> Dict[int, int]:
    """Global qubit index -> global classical bit index; both directions must be one-to-one"""
    qubit_offsets = body.offsets("qubit")
    bit_offsets = body.offsets("bit")
    mapping: Dict[int, int] = {}
    written: Dict[int, int] = {}
    for stmt in body.statements:
        if not isinstance(stmt, MeasureStmt):
            continue
        for bit, qubit in zip(stmt.bits, stmt.qubits):
            q = qubit_offsets[qubit.register] + qubit.index
            b = bit_offsets[bit.register] + bit.index
            if q in mapping:
                raise CircuitError(f"line {stmt.line}: {qubit} is measured more than once")
            if b in written:
                raise CircuitError(f"line {stmt.line}: {bit} receives more than one measurement")
            mapping[q] = b
            written[b] = q
    return mapping


def inline(test: SubroutineDef, program: Program) -> FlatBody:
    """Expand every call in the body of `test` transitively"""
    expander = _Expander(program)
    binding: Dict[str, str] = {}
    for param in test.params:
        expander.declare(param.name, param.kind, param.width, test.name)
        binding[param.name] = param.name
    expander.expand(test, binding, (test.name,))
    body = FlatBody(tuple(expander.statements), dict(expander.table), {})
    logger.debug(f"Inlined {test.name}: {len(body.statements)} statement(s), {len(body.register_table)} register(s)")
    return FlatBody(body.statements, body.register_table, _measurement_map(body))


def build_circuit(flat: FlatBody) -> Circuit:
    qubit_offsets = flat.offsets("qubit")
    bit_offsets = flat.offsets("bit")
    ops: List[Operation] = []
    for stmt in flat.statements:
        if isinstance(stmt, CallStmt):
            raise CircuitError(f"line {stmt.line}: unexpanded call to {stmt.callee!r}")
        if isinstance(stmt, GateApplication):
            if stmt.gate not in GATE_SIGNATURES:
                raise CircuitError(f"line {stmt.line}: unknown gate {stmt.gate!r}")
            qubits = tuple(qubit_offsets[ref.register] + ref.index for ref in stmt.targets)
            ops.append(Operation(stmt.gate, qubits, stmt.angles))
        elif isinstance(stmt, MeasureStmt):
            for bit, qubit in zip(stmt.bits, stmt.qubits):
                q = qubit_offsets[qubit.register] + qubit.index
                ops.append(Operation("measure", (q,), (), bit_offsets[bit.register] + bit.index))
    return Circuit(flat.total_width("qubit"), tuple(ops), flat.total_width("bit"), dict(flat.measurement_map))
