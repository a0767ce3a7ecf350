"""
Statevector simulator with seeded shot sampling and a depolarizing-noise backend.

Conventions:
- basis index b of the statevector holds qubit k in bit k of b;
- classical bit 0 is the rightmost character of a bitstring key;
- measurements are terminal: a gate on an already measured qubit is rejected.

Noise is simulated with Pauli trajectories. After every 1-qubit gate a random
X/Y/Z is injected with probability p1; after every multi-qubit gate a random
non-identity Pauli string over its qubits is injected with probability p2.
Shots that share the same error pattern share one statevector evolution.
"""
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from loguru import logger

from pragmatest.exceptions import SimulationError
from pragmatest.models import Circuit, Counts, Distribution, NoiseModel, Operation, Statevector, TestConfig

_SQRT2_INV = 1 / np.sqrt(2)

_I = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_H = np.array([[1, 1], [1, -1]], dtype=complex) * _SQRT2_INV
_S = np.array([[1, 0], [0, 1j]], dtype=complex)
_T = np.array([[1, 0], [0, np.exp(1j * np.pi / 4)]], dtype=complex)
_SX = 0.5 * np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]], dtype=complex)
_SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)

PAULIS = (_I, _X, _Y, _Z)


def _u(theta: float, phi: float, lam: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array(
        [[c, -np.exp(1j * lam) * s], [np.exp(1j * phi) * s, np.exp(1j * (phi + lam)) * c]],
        dtype=complex,
    )


def _rx(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def _ry(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def _rz(theta: float) -> np.ndarray:
    return np.array([[np.exp(-0.5j * theta), 0], [0, np.exp(0.5j * theta)]], dtype=complex)


def _phase(lam: float) -> np.ndarray:
    return np.array([[1, 0], [0, np.exp(1j * lam)]], dtype=complex)


def controlled(matrix: np.ndarray) -> np.ndarray:
    """Controlled version of a gate; the control is the first (most significant) qubit"""
    dim = matrix.shape[0]
    out = np.eye(2 * dim, dtype=complex)
    out[dim:, dim:] = matrix
    return out


GateFactory = Callable[..., np.ndarray]

# name -> (number of qubits, number of angles, matrix factory)
GATE_TABLE: Dict[str, Tuple[int, int, GateFactory]] = {
    "id": (1, 0, lambda: _I),
    "x": (1, 0, lambda: _X),
    "y": (1, 0, lambda: _Y),
    "z": (1, 0, lambda: _Z),
    "h": (1, 0, lambda: _H),
    "s": (1, 0, lambda: _S),
    "sdg": (1, 0, lambda: _S.conj().T),
    "t": (1, 0, lambda: _T),
    "tdg": (1, 0, lambda: _T.conj().T),
    "sx": (1, 0, lambda: _SX),
    "sxdg": (1, 0, lambda: _SX.conj().T),
    "rx": (1, 1, _rx),
    "ry": (1, 1, _ry),
    "rz": (1, 1, _rz),
    "p": (1, 1, _phase),
    "phase": (1, 1, _phase),
    "u1": (1, 1, _phase),
    "u2": (1, 2, lambda phi, lam: _u(np.pi / 2, phi, lam)),
    "u3": (1, 3, _u),
    "u": (1, 3, _u),
    "U": (1, 3, _u),
    "cx": (2, 0, lambda: controlled(_X)),
    "CX": (2, 0, lambda: controlled(_X)),
    "cy": (2, 0, lambda: controlled(_Y)),
    "cz": (2, 0, lambda: controlled(_Z)),
    "ch": (2, 0, lambda: controlled(_H)),
    "cp": (2, 1, lambda lam: controlled(_phase(lam))),
    "cphase": (2, 1, lambda lam: controlled(_phase(lam))),
    "crx": (2, 1, lambda theta: controlled(_rx(theta))),
    "cry": (2, 1, lambda theta: controlled(_ry(theta))),
    "crz": (2, 1, lambda theta: controlled(_rz(theta))),
    "cu": (2, 4, lambda theta, phi, lam, gamma: controlled(np.exp(1j * gamma) * _u(theta, phi, lam))),
    "swap": (2, 0, lambda: _SWAP),
    "ccx": (3, 0, lambda: controlled(controlled(_X))),
    "cswap": (3, 0, lambda: controlled(_SWAP)),
}

GATE_SIGNATURES: Dict[str, Tuple[int, int]] = {name: (nq, na) for name, (nq, na, _) in GATE_TABLE.items()}

# available without include "stdgates.inc"
BUILTIN_GATES = frozenset({"U", "CX"})


def gate_matrix(name: str, params: Tuple[float, ...] = ()) -> np.ndarray:
    if name not in GATE_TABLE:
        raise SimulationError(f"unknown gate {name!r}")
    num_qubits, num_params, factory = GATE_TABLE[name]
    if len(params) != num_params:
        raise SimulationError(f"gate {name!r} takes {num_params} angle(s), got {len(params)}")
    return factory(*params)


def apply_gate(state: np.ndarray, matrix: np.ndarray, qubits: Tuple[int, ...], num_qubits: int) -> np.ndarray:
    """Apply a k-qubit unitary; qubits[0] is the most significant index of the matrix"""
    k = len(qubits)
    psi = state.reshape([2] * num_qubits)
    axes = [num_qubits - 1 - q for q in qubits]
    psi = np.moveaxis(psi, axes, list(range(k)))
    shape = psi.shape
    psi = (matrix @ psi.reshape(2 ** k, -1)).reshape(shape)
    psi = np.moveaxis(psi, list(range(k)), axes)
    return psi.reshape(-1)


def check_terminal_measurements(circuit: Circuit) -> None:
    measured = set()
    for op in circuit.ops:
        if op.is_measurement:
            if op.qubits[0] in measured:
                raise SimulationError(f"qubit {op.qubits[0]} is measured more than once")
            measured.add(op.qubits[0])
        elif measured.intersection(op.qubits):
            raise SimulationError(
                f"gate {op.name!r} acts on qubit(s) {sorted(measured.intersection(op.qubits))} after measurement; "
                "mid-circuit measurement is not supported"
            )


class SimulatorService:
    """Executes circuits on the ideal or noisy statevector backend"""

    def __init__(self, noise: Optional[NoiseModel] = None):
        self.noise = noise or NoiseModel()

    def statevector(self, circuit: Circuit) -> Statevector:
        """Evolve |0...0> through every gate, ignoring measurements"""
        return Statevector(self._evolve(circuit, {}), circuit.num_qubits)

    def ideal_distribution(self, circuit: Circuit) -> Distribution:
        check_terminal_measurements(circuit)
        if not circuit.measurements:
            raise SimulationError("nothing measured")
        keys, probs = self._outcome_probabilities(circuit, self._evolve(circuit, {}))
        width = circuit.classical_width
        return Distribution(entries={
            format(int(key), f"0{width}b"): min(float(prob), 1.0)
            for key, prob in zip(keys, probs)
            if prob > 1e-12
        })

    def run_shots(self, circuit: Circuit, config: TestConfig, noise: Optional[NoiseModel] = None) -> Counts:
        if config.backend == "hardware":
            raise SimulationError("hardware backend reserved for future integration")
        if config.seed is None:
            raise SimulationError("sampling needs a resolved seed")
        check_terminal_measurements(circuit)
        if not circuit.measurements:
            raise SimulationError("nothing measured")

        rng = np.random.default_rng(config.seed)
        if config.backend == "noisy":
            totals = self._sample_noisy(circuit, config.shots, rng, noise or self.noise)
        else:
            keys, probs = self._outcome_probabilities(circuit, self._evolve(circuit, {}))
            totals = dict(zip(keys.tolist(), rng.multinomial(config.shots, probs / probs.sum()).tolist()))

        width = circuit.classical_width
        entries = {format(key, f"0{width}b"): count for key, count in sorted(totals.items()) if count}
        logger.debug(f"Sampled {config.shots} shots on {config.backend} backend: {len(entries)} outcome(s)")
        return Counts(entries=entries, shots=config.shots)

    def depth(self, circuit: Circuit) -> int:
        """Longest chain of operations sharing a qubit or classical bit"""
        levels: Dict[Tuple[str, int], int] = {}
        deepest = 0
        for op in circuit.ops:
            wires = [("q", q) for q in op.qubits]
            if op.clbit is not None:
                wires.append(("c", op.clbit))
            level = 1 + max((levels.get(w, 0) for w in wires), default=0)
            for wire in wires:
                levels[wire] = level
            deepest = max(deepest, level)
        return deepest

    # -- internals -------------------------------------------------------

    def _evolve(self, circuit: Circuit, injected: Dict[int, int]) -> np.ndarray:
        n = circuit.num_qubits
        state = np.zeros(2 ** n, dtype=complex)
        state[0] = 1.0
        for index, op in enumerate(circuit.ops):
            if op.is_measurement:
                continue
            state = apply_gate(state, gate_matrix(op.name, op.params), op.qubits, n)
            code = injected.get(index)
            if code:
                state = self._apply_pauli_string(state, code, op.qubits, n)
        return state

    @staticmethod
    def _apply_pauli_string(state: np.ndarray, code: int, qubits: Tuple[int, ...], n: int) -> np.ndarray:
        k = len(qubits)
        for position, qubit in enumerate(qubits):
            digit = (code // 4 ** (k - 1 - position)) % 4
            if digit:
                state = apply_gate(state, PAULIS[digit], (qubit,), n)
        return state

    @staticmethod
    def _outcome_probabilities(circuit: Circuit, state: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Marginalize |amplitude|^2 onto classical outcomes (as integers, bit c = classical bit c)"""
        basis = np.arange(state.shape[0])
        keys = np.zeros_like(basis)
        for op in circuit.measurements:
            keys |= ((basis >> op.qubits[0]) & 1) << op.clbit
        unique_keys, inverse = np.unique(keys, return_inverse=True)
        probs = np.bincount(inverse.reshape(-1), weights=np.abs(state) ** 2, minlength=len(unique_keys))
        return unique_keys, probs

    def _sample_noisy(self, circuit: Circuit, shots: int, rng: np.random.Generator, noise: NoiseModel) -> Dict[int, int]:
        gate_indices = [i for i, op in enumerate(circuit.ops) if not op.is_measurement]
        totals: Dict[int, int] = {}
        if not gate_indices:
            keys, probs = self._outcome_probabilities(circuit, self._evolve(circuit, {}))
            return dict(zip(keys.tolist(), rng.multinomial(shots, probs / probs.sum()).tolist()))

        columns: List[np.ndarray] = []
        for index in gate_indices:
            k = len(circuit.ops[index].qubits)
            rate = noise.p1 if k == 1 else noise.p2
            hits = rng.random(shots) < rate
            paulis = rng.integers(1, 4 ** k, size=shots)
            columns.append(np.where(hits, paulis, 0))
        patterns, inverse = np.unique(np.stack(columns, axis=1), axis=0, return_inverse=True)
        sizes = np.bincount(inverse.reshape(-1), minlength=len(patterns))

        for pattern, size in zip(patterns, sizes):
            injected = {gate_indices[j]: int(code) for j, code in enumerate(pattern) if code}
            keys, probs = self._outcome_probabilities(circuit, self._evolve(circuit, injected))
            for key, count in zip(keys.tolist(), rng.multinomial(int(size), probs / probs.sum()).tolist()):
                totals[key] = totals.get(key, 0) + count
        logger.debug(f"Noisy sampling: {len(patterns)} distinct error pattern(s) over {shots} shots")
        return totals


_default_simulator = SimulatorService()

depth = _default_simulator.depth


def measurement_free(circuit: Circuit) -> Circuit:
    return Circuit(circuit.num_qubits, circuit.gates, circuit.classical_width, {})


def operation(name: str, *qubits: int, params: Tuple[float, ...] = (), clbit: Optional[int] = None) -> Operation:
    """Shorthand used to build small circuits programmatically"""
    return Operation(name=name, qubits=tuple(qubits), params=tuple(params), clbit=clbit)
