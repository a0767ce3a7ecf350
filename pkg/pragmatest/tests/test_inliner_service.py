"""
Tests for call inlining and circuit lowering
"""
import numpy as np
import pytest

from pragmatest.exceptions import CircuitError, InlineError
from pragmatest.models import CallStmt, FlatBody, GateApplication, MeasureStmt, RegisterRef
from pragmatest.services.inliner_service import build_circuit, inline
from pragmatest.tests.conftest import HEADER, parse_ok, read_fixture


def gates_of(flat):
    return [s for s in flat.statements if isinstance(s, GateApplication)]


def flatten(program, name):
    return inline(program.subroutine(name), program)


class TestInline:
    """Call expansion"""

    @pytest.fixture
    def nested(self):
        return parse_ok(read_fixture("nested_calls.qasm"))

    def test_flagship_test_expands_helper(self):
        program = parse_ok(read_fixture("bell_test.qasm"))

        flat = flatten(program, "test_distribution")

        assert [(g.gate, g.targets) for g in gates_of(flat)] == [
            ("h", (RegisterRef("q", 0),)),
            ("cx", (RegisterRef("q", 0), RegisterRef("q", 1))),
        ]
        assert flat.measurement_map == {0: 0, 1: 1}
        assert not any(isinstance(s, CallStmt) for s in flat.statements)

    def test_two_levels_keep_source_order(self, nested):
        """Test inner calls expand in place, depth first"""
        flat = flatten(nested, "test_nested")

        assert [(g.gate, g.targets) for g in gates_of(flat)] == [
            ("h", (RegisterRef("r", 0),)),
            ("cx", (RegisterRef("r", 0), RegisterRef("r", 1))),
            ("rz", (RegisterRef("r", 1),)),
        ]

    def test_statement_count_adds_up(self, nested):
        """Test the flat body has the direct statements plus each callee's expansion"""
        flat = flatten(nested, "test_nested")

        # decl r, decl m, measure + h, cx, rz from prepare/entangle
        assert len(flat.statements) == 6

    def test_body_without_calls_is_unchanged(self, nested):
        sub = nested.subroutine("test_nested_reference")

        assert inline(sub, nested).statements == sub.body

    def test_callee_local_register_is_hoisted(self, nested):
        flat = flatten(nested, "test_callee_local_register")

        assert flat.register_table == {"q": ("qubit", 1), "m": ("bit", 1), "anc": ("qubit", 1)}
        assert flat.offsets("qubit") == {"q": 0, "anc": 1}

    def test_inlined_and_hand_flattened_states_match(self, nested, simulator):
        """Test inlining is semantics preserving on the statevector"""
        inlined = build_circuit(flatten(nested, "test_nested"))
        reference = build_circuit(flatten(nested, "test_nested_reference"))

        left = simulator.statevector(inlined).amplitudes
        right = simulator.statevector(reference).amplitudes

        assert np.allclose(left, right, atol=1e-12)


class TestInlineErrors:
    """Calls that cannot be expanded"""

    @pytest.fixture
    def program(self):
        return parse_ok(read_fixture("recursion.qasm"))

    def test_mutual_recursion(self, program):
        with pytest.raises(InlineError, match="recursion not supported: test_mutual_recursion -> ping -> pong -> ping"):
            flatten(program, "test_mutual_recursion")

    def test_width_mismatch(self, program):
        with pytest.raises(InlineError, match="expects qubit\\[1\\] q"):
            flatten(program, "test_width_mismatch")

    def test_arity_mismatch(self, program):
        with pytest.raises(InlineError, match="takes 1 argument\\(s\\), got 2"):
            flatten(program, "test_too_many_arguments")

    def test_undefined_callee(self):
        program = parse_ok(HEADER + "def test_a() {\n    qubit q;\n    nowhere(q);\n}\n")

        with pytest.raises(InlineError, match="call to undefined subroutine 'nowhere'"):
            flatten(program, "test_a")

    def test_local_register_collision(self):
        program = parse_ok(HEADER + (
            "def helper(qubit t) {\n"
            "    qubit[1] anc;\n"
            "    cx anc[0], t;\n"
            "}\n"
            "def test_twice() {\n"
            "    qubit q;\n"
            "    helper(q);\n"
            "    helper(q);\n"
            "}\n"
        ))

        with pytest.raises(InlineError, match="collides"):
            flatten(program, "test_twice")


class TestBuildCircuit:
    """Lowering of flat bodies to operations"""

    def test_bell_operations(self):
        program = parse_ok(read_fixture("bell_test.qasm"))

        circuit = build_circuit(flatten(program, "test_distribution"))

        assert circuit.num_qubits == 2
        assert circuit.classical_width == 2
        assert [(op.name, op.qubits, op.clbit) for op in circuit.ops] == [
            ("h", (0,), None),
            ("cx", (0, 1), None),
            ("measure", (0,), 0),
            ("measure", (1,), 1),
        ]

    def test_registers_are_laid_out_in_declaration_order(self):
        program = parse_ok(HEADER + (
            "def test_layout() {\n"
            "    qubit[1] a;\n"
            "    qubit[2] b;\n"
            "    bit[1] c;\n"
            "    x b[1];\n"
            "    measure b[1] -> c[0];\n"
            "}\n"
        ))

        circuit = build_circuit(flatten(program, "test_layout"))

        assert circuit.num_qubits == 3
        assert circuit.ops[0].qubits == (2,)
        assert circuit.measurement_map == {2: 0}

    def test_declarations_only(self):
        program = parse_ok(HEADER + "def test_empty() {\n    qubit[2] q;\n}\n")

        circuit = build_circuit(flatten(program, "test_empty"))

        assert circuit.ops == ()
        assert circuit.num_qubits == 2

    def test_double_measurement_is_rejected(self):
        program = parse_ok(HEADER + (
            "def test_twice() {\n"
            "    qubit q;\n"
            "    bit[2] c;\n"
            "    measure q[0] -> c[0];\n"
            "    measure q[0] -> c[1];\n"
            "}\n"
        ))

        with pytest.raises(CircuitError, match="measured more than once"):
            flatten(program, "test_twice")

    def test_partial_measurement(self, simulator):
        """Test a single measured qubit produces a one-bit outcome"""
        program = parse_ok(HEADER + (
            "def test_partial() {\n"
            "    qubit[2] q;\n"
            "    bit[1] m;\n"
            "    x q[1];\n"
            "    measure q[1] -> m[0];\n"
            "}\n"
        ))
        flat = flatten(program, "test_partial")
        circuit = build_circuit(flat)

        assert flat.measurement_map == {1: 0}
        assert simulator.ideal_distribution(circuit).entries == {"1": pytest.approx(1.0)}

    def test_leftover_call_is_a_circuit_error(self):
        flat = FlatBody((CallStmt("ghost", (), 3),), {}, {})

        with pytest.raises(CircuitError, match="unexpanded call"):
            build_circuit(flat)

    def test_measure_statements_lower_to_one_op_per_pair(self):
        program = parse_ok(HEADER + "def test_m() {\n    qubit[3] q;\n    bit[3] c = measure q;\n}\n")
        flat = flatten(program, "test_m")

        measure = next(s for s in flat.statements if isinstance(s, MeasureStmt))
        circuit = build_circuit(flat)

        assert len(measure.qubits) == 3
        assert [op.clbit for op in circuit.measurements] == [0, 1, 2]
