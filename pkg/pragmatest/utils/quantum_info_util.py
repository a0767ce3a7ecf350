"""
Reduced density matrices and von Neumann entropy of pure states.
"""
from typing import Sequence

import numpy as np

from pragmatest.exceptions import EvaluationError
from pragmatest.models import DensityMatrix, Statevector

EIGENVALUE_FLOOR = 1e-12


def partial_trace(state: Statevector, keep: Sequence[int]) -> DensityMatrix:
    """
    Trace out every qubit not in `keep`.

    The reduced matrix uses the global basis convention restricted to the kept
    qubits: the smallest kept qubit is bit 0 of the reduced basis index.
    """
    n = state.num_qubits
    kept = sorted(set(keep))
    if not kept:
        raise EvaluationError("partition must contain at least one qubit")
    if len(kept) != len(keep):
        raise EvaluationError(f"partition {list(keep)} repeats a qubit")
    if any(q < 0 or q >= n for q in kept):
        raise EvaluationError(f"partition {list(keep)} out of range for {n} qubit(s)")
    if len(kept) == n:
        raise EvaluationError("partition must leave at least one qubit on the other side")

    psi = state.amplitudes.reshape([2] * n)
    axes = [n - 1 - q for q in reversed(kept)]
    psi = np.moveaxis(psi, axes, list(range(len(kept)))).reshape(2 ** len(kept), -1)
    return DensityMatrix(psi @ psi.conj().T)


def von_neumann_entropy(rho: DensityMatrix) -> float:
    """S(rho) = -sum(l * log2(l)) over eigenvalues, in bits"""
    eigenvalues = np.linalg.eigvalsh(rho.matrix)
    eigenvalues = eigenvalues[eigenvalues > EIGENVALUE_FLOOR]
    return max(float(-np.sum(eigenvalues * np.log2(eigenvalues))), 0.0)
