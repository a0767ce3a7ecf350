"""
Tests for reduced density matrices and entanglement entropy
"""
import itertools
import math

import numpy as np
import pytest

from pragmatest.exceptions import EvaluationError
from pragmatest.models import Circuit, Statevector
from pragmatest.services.simulator_service import SimulatorService, operation
from pragmatest.utils.quantum_info_util import partial_trace, von_neumann_entropy


def schmidt_entropy(amplitudes: np.ndarray, num_qubits: int, keep) -> float:
    """Entropy from the singular values of the bipartition matrix, built index by index"""
    keep = sorted(keep)
    rest = [q for q in range(num_qubits) if q not in keep]
    matrix = np.zeros((2 ** len(keep), 2 ** len(rest)), dtype=complex)
    for index, amplitude in enumerate(amplitudes):
        row = sum(((index >> q) & 1) << k for k, q in enumerate(keep))
        col = sum(((index >> q) & 1) << k for k, q in enumerate(rest))
        matrix[row, col] = amplitude
    weights = np.linalg.svd(matrix, compute_uv=False) ** 2
    weights = weights[weights > 1e-14]
    return float(-np.sum(weights * np.log2(weights)))


def grid_operations(num_qubits: int):
    singles = [operation("h", q) for q in range(num_qubits)]
    pairs = [operation("cx", a, b) for a, b in itertools.permutations(range(num_qubits), 2)]
    return singles + pairs


class TestPartialTrace:
    """Reduced states of small registers"""

    def test_bell_reduced_state_is_maximally_mixed(self, simulator, bell_circuit):
        state = simulator.statevector(bell_circuit)

        rho = partial_trace(state, [0])

        assert np.allclose(rho.matrix, np.eye(2) / 2, atol=1e-12)
        assert rho.num_qubits == 1

    def test_product_state_reduces_to_pure_state(self):
        # |1> on qubit 0, |0> on qubit 1
        amplitudes = np.array([0, 1, 0, 0], dtype=complex)

        rho = partial_trace(Statevector(amplitudes, 2), [0])

        assert np.allclose(rho.matrix, np.array([[0, 0], [0, 1]]))

    def test_kept_qubits_keep_global_order(self):
        # qubit 2 set, qubit 0 clear, traced qubit 1 clear
        amplitudes = np.zeros(8, dtype=complex)
        amplitudes[0b100] = 1.0

        rho = partial_trace(Statevector(amplitudes, 3), [2, 0])

        assert rho.matrix[0b10, 0b10] == pytest.approx(1.0)

    @pytest.mark.parametrize("partition", [[], [0, 0], [5], [0, 1]])
    def test_invalid_partitions(self, simulator, bell_circuit, partition):
        state = simulator.statevector(bell_circuit)

        with pytest.raises(EvaluationError):
            partial_trace(state, partition)


class TestEntropy:
    """von Neumann entropy in bits"""

    def test_bell_entropy_is_one_bit(self, simulator, bell_circuit):
        state = simulator.statevector(bell_circuit)

        assert von_neumann_entropy(partial_trace(state, [0])) == pytest.approx(1.0, abs=1e-9)

    def test_product_states_have_no_entropy(self, simulator):
        plus_zero = Circuit(2, (operation("h", 0),), 0, {})
        state = simulator.statevector(plus_zero)

        assert von_neumann_entropy(partial_trace(state, [0])) <= 1e-6
        assert von_neumann_entropy(partial_trace(state, [1])) <= 1e-6

    def test_ghz_entropy_is_one_bit_for_any_cut(self, simulator):
        ghz = Circuit(3, (operation("h", 0), operation("cx", 0, 1), operation("cx", 1, 2)), 0, {})
        state = simulator.statevector(ghz)

        for keep in ([0], [1], [2], [0, 1], [0, 2]):
            assert von_neumann_entropy(partial_trace(state, keep)) == pytest.approx(1.0, abs=1e-9)

    def test_agrees_with_schmidt_decomposition_on_small_circuits(self):
        """Test every circuit of up to 3 qubits and 4 gates from {h, cx} against an SVD oracle"""
        simulator = SimulatorService()
        checked = 0
        for num_qubits in (2, 3):
            options = grid_operations(num_qubits)
            partitions = [list(c) for r in range(1, num_qubits) for c in itertools.combinations(range(num_qubits), r)]
            for length in range(0, 5):
                for ops in itertools.product(options, repeat=length):
                    state = simulator.statevector(Circuit(num_qubits, ops, 0, {}))
                    for keep in partitions:
                        fast = von_neumann_entropy(partial_trace(state, keep))
                        oracle = schmidt_entropy(state.amplitudes, num_qubits, keep)
                        assert math.isclose(fast, oracle, abs_tol=1e-9), (ops, keep)
                    checked += 1

        assert checked == sum(4 ** k for k in range(5)) + sum(9 ** k for k in range(5))
