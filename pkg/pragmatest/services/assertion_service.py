"""
Assertion evaluation.

Every evaluator returns an AssertionResult. A comparison that does not hold is
a `fail`; a precondition that cannot be met (wrong key width, unmeasured
qubit, degenerate marginal, NaN) is an `error`.
"""
import functools
import math
import operator
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Mapping, Optional

from loguru import logger

from pragmatest.exceptions import EvaluationError
from pragmatest.models import (
    AssertionDirective,
    AssertionResult,
    Circuit,
    ComparisonSpec,
    Counts,
    Distribution,
    Statevector,
)
from pragmatest.services.simulator_service import depth as circuit_depth
from pragmatest.utils.quantum_info_util import partial_trace, von_neumann_entropy
from pragmatest.utils.stats_util import (
    chi2_goodness_of_fit,
    classical_fidelity,
    hellinger,
    kl_divergence,
    shannon_entropy,
    total_variation,
)

ENTANGLEMENT_THRESHOLD = 1e-6

_OPERATORS: Dict[str, Callable[[float, float], bool]] = {
    "<": operator.lt,
    "<=": operator.le,
    "==": operator.eq,
    ">": operator.gt,
    ">=": operator.ge,
    "!=": operator.ne,
}


def compare(actual: float, spec: ComparisonSpec) -> bool:
    if math.isnan(actual):
        raise EvaluationError("actual value is NaN")
    if spec.operator == "~=":
        return abs(actual - spec.threshold) <= spec.atol
    return _OPERATORS[spec.operator](actual, spec.threshold)


def _fmt(value: float) -> str:
    if math.isinf(value):
        return "+inf" if value > 0 else "-inf"
    return f"{value:.6g}"


def _evaluator(kind: str):
    """Turn EvaluationError raised by an evaluator into an `error` result"""
    def decorate(func):
        @functools.wraps(func)
        def wrapper(*args, line: int = 0, **kwargs) -> AssertionResult:
            try:
                result = func(*args, **kwargs)
            except EvaluationError as e:
                logger.debug(f"assert.{kind} on line {line} could not be evaluated: {e}")
                return AssertionResult(status="error", kind=kind, message=str(e), line=line)
            return result.model_copy(update={"line": line})
        return wrapper
    return decorate


def _verdict(kind: str, actual: float, spec: ComparisonSpec, label: str, note: str = "") -> AssertionResult:
    passed = compare(actual, spec)
    message = f"{label} = {_fmt(actual)}, expected {spec.describe()}"
    if note:
        message += f"; {note}"
    return AssertionResult(
        status="pass" if passed else "fail", kind=kind, message=message,
        actual=actual, expected=f"{label} {spec.describe()}",
    )


def _frequencies(counts: Counts) -> Dict[str, float]:
    return {key: n / counts.shots for key, n in counts.entries.items()}


def _check_width(counts: Counts, width: int, what: str) -> None:
    if counts.width != width:
        raise EvaluationError(f"{what} has {width} bit(s) but measurements produce {counts.width}")


def _bit(key: str, index: int) -> int:
    return int(key[-1 - index])


def _measured_bit(measurement_map: Mapping[int, int], qubit: int) -> int:
    if qubit not in measurement_map:
        raise EvaluationError(f"qubit {qubit} not measured")
    return measurement_map[qubit]


def _describe_outcomes(entries: Mapping[str, int], limit: int = 8) -> str:
    items = sorted(entries.items(), key=lambda kv: (-kv[1], kv[0]))
    text = ", ".join(f"{k}: {n}" for k, n in items[:limit])
    return text + (", ..." if len(items) > limit else "")


# -- deterministic -------------------------------------------------------

@_evaluator("output")
def eval_output(counts: Counts, expected: str) -> AssertionResult:
    _check_width(counts, len(expected), f"expected output {expected!r}")
    passed = list(counts.entries) == [expected]
    return AssertionResult(
        status="pass" if passed else "fail", kind="output",
        message=f"observed {{{_describe_outcomes(counts.entries)}}}, expected every shot to read {expected!r}",
        actual=dict(counts.entries), expected=f'== "{expected}"',
    )


# -- distribution distances ----------------------------------------------

def _against_reference(counts: Counts, reference: Distribution) -> Dict[str, float]:
    _check_width(counts, reference.width, "reference distribution")
    return _frequencies(counts)


@_evaluator("tvd")
def eval_tvd(counts: Counts, reference: Distribution, spec: ComparisonSpec) -> AssertionResult:
    p = _against_reference(counts, reference)
    return _verdict("tvd", total_variation(p, reference.entries), spec, "tvd")


@_evaluator("hellinger")
def eval_hellinger(counts: Counts, reference: Distribution, spec: ComparisonSpec) -> AssertionResult:
    p = _against_reference(counts, reference)
    return _verdict("hellinger", hellinger(p, reference.entries), spec, "hellinger")


@_evaluator("kl")
def eval_kl(counts: Counts, reference: Distribution, spec: ComparisonSpec) -> AssertionResult:
    p = _against_reference(counts, reference)
    value = kl_divergence(p, reference.entries)
    note = ""
    if math.isinf(value):
        outside = {k: n for k, n in counts.entries.items() if reference.get(k) <= 0}
        note = f"observed outcome(s) with zero reference probability: {_describe_outcomes(outside)}"
    return _verdict("kl", value, spec, "kl", note)


@_evaluator("chi2")
def eval_chi2(counts: Counts, reference: Distribution, spec: ComparisonSpec) -> AssertionResult:
    _check_width(counts, reference.width, "reference distribution")
    statistic, p_value, unexpected = chi2_goodness_of_fit(counts.entries, reference.entries, counts.shots)
    note = f"chi2 = {_fmt(statistic)}, df = {sum(1 for p in reference.entries.values() if p > 0) - 1}"
    if unexpected:
        note += f"; unexpected outcome(s): {_describe_outcomes(unexpected)}"
    return _verdict("chi2", p_value, spec, "p-value", note)


# -- per-outcome statistics ---------------------------------------------

@_evaluator("marginal")
def eval_marginal(
    counts: Counts, qubit: int, value: int, spec: ComparisonSpec, measurement_map: Mapping[int, int]
) -> AssertionResult:
    bit = _measured_bit(measurement_map, qubit)
    hits = sum(n for key, n in counts.entries.items() if _bit(key, bit) == value)
    return _verdict("marginal", hits / counts.shots, spec, f"P(q[{qubit}] == {value})")


@_evaluator("observable")
def eval_observable(
    counts: Counts, qubits: Iterable[int], spec: ComparisonSpec, measurement_map: Mapping[int, int]
) -> AssertionResult:
    qubits = list(qubits)
    bits = [_measured_bit(measurement_map, q) for q in qubits]
    odd = sum(n for key, n in counts.entries.items() if sum(_bit(key, b) for b in bits) % 2)
    label = "<" + " ".join(f"Z{q}" for q in qubits) + ">"
    return _verdict("observable", 1.0 - 2.0 * (odd / counts.shots), spec, label)


@_evaluator("entropy")
def eval_entropy(counts: Counts, spec: ComparisonSpec) -> AssertionResult:
    return _verdict("entropy", shannon_entropy(_frequencies(counts)), spec, "entropy")


@_evaluator("correlation")
def eval_correlation(counts: Counts, i: int, j: int, spec: ComparisonSpec) -> AssertionResult:
    if i == j:
        raise EvaluationError("correlation needs two different bits")
    for index in (i, j):
        if index >= counts.width:
            raise EvaluationError(f"bit m[{index}] out of range for {counts.width} measured bit(s)")
    n = counts.shots
    ones_i = sum(c for key, c in counts.entries.items() if _bit(key, i))
    ones_j = sum(c for key, c in counts.entries.items() if _bit(key, j))
    both = sum(c for key, c in counts.entries.items() if _bit(key, i) and _bit(key, j))
    # integer moments keep perfectly (anti)correlated counts at exactly +-1
    var_i, var_j = n * ones_i - ones_i ** 2, n * ones_j - ones_j ** 2
    if var_i == 0 or var_j == 0:
        raise EvaluationError(f"degenerate marginal: m[{i if var_i == 0 else j}] never varies")
    product = var_i * var_j
    root = math.isqrt(product)
    denominator = root if root * root == product else math.sqrt(product)
    r = max(-1.0, min(1.0, (n * both - ones_i * ones_j) / denominator))
    return _verdict("correlation", r, spec, f"corr(m[{i}], m[{j}])")


@_evaluator("probability")
def eval_probability(counts: Counts, bits: str, spec: ComparisonSpec) -> AssertionResult:
    _check_width(counts, len(bits), f"outcome {bits!r}")
    return _verdict("probability", counts.entries.get(bits, 0) / counts.shots, spec, f"P({bits})")


@_evaluator("most_frequent")
def eval_most_frequent(counts: Counts, bits: str) -> AssertionResult:
    _check_width(counts, len(bits), f"outcome {bits!r}")
    top = max(counts.entries.values())
    leaders = sorted(key for key, n in counts.entries.items() if n == top)
    winner = leaders[0]
    message = f"most frequent outcome {winner!r} ({top} of {counts.shots} shots), expected {bits!r}"
    if len(leaders) > 1:
        message += f"; tie between {', '.join(leaders)} broken by smallest key"
    return AssertionResult(
        status="pass" if winner == bits else "fail", kind="most_frequent",
        message=message, actual=winner, expected=f'== "{bits}"',
    )


@_evaluator("fidelity")
def eval_fidelity(counts: Counts, ideal: Distribution, spec: ComparisonSpec) -> AssertionResult:
    _check_width(counts, ideal.width, "ideal distribution")
    return _verdict("fidelity", classical_fidelity(_frequencies(counts), ideal.entries), spec, "fidelity")


# -- state and structure -------------------------------------------------

@_evaluator("entangled")
def eval_entangled(state: Statevector, partition: Iterable[int]) -> AssertionResult:
    partition = list(partition)
    entropy = von_neumann_entropy(partial_trace(state, partition))
    passed = entropy > ENTANGLEMENT_THRESHOLD
    return AssertionResult(
        status="pass" if passed else "fail", kind="entangled",
        message=f"S(rho_{partition}) = {_fmt(entropy)} bits, expected > {ENTANGLEMENT_THRESHOLD:g}",
        actual=entropy, expected=f"S > {ENTANGLEMENT_THRESHOLD:g}",
    )


@_evaluator("gate_set")
def eval_gate_set(circuit: Circuit, allowed: Iterable[str]) -> AssertionResult:
    allowed = set(allowed)
    violators = Counter(op.name for op in circuit.ops if op.name not in allowed)
    expected = "{" + ", ".join(sorted(allowed)) + "}"
    if not violators:
        return AssertionResult(status="pass", kind="gate_set", message=f"all operations in {expected}",
                               actual=[], expected=expected)
    listed = ", ".join(f"{name}×{n}" for name, n in sorted(violators.items()))
    return AssertionResult(status="fail", kind="gate_set", message=f"operations outside {expected}: {listed}",
                           actual=sorted(violators), expected=expected)


@_evaluator("depth")
def eval_depth(circuit: Circuit, bound: int) -> AssertionResult:
    value = circuit_depth(circuit)
    return AssertionResult(
        status="pass" if value <= bound else "fail", kind="depth",
        message=f"depth = {value}, expected <= {bound}", actual=value, expected=f"<= {bound}",
    )


# -- dispatch --------------------------------------------------------------

COUNTS_KINDS = frozenset({
    "output", "tvd", "hellinger", "kl", "chi2", "marginal", "observable", "entropy",
    "correlation", "probability", "most_frequent", "fidelity",
})


@dataclass
class EvaluationContext:
    """Whatever the runner has computed for one test so far"""
    circuit: Circuit
    counts: Optional[Counts] = None
    statevector: Optional[Statevector] = None
    ideal: Optional[Distribution] = None
    measurement_map: Dict[int, int] = field(default_factory=dict)


def evaluate(directive: AssertionDirective, context: EvaluationContext) -> AssertionResult:
    kind, line = directive.kind, directive.line
    if kind == "gate_set":
        return eval_gate_set(context.circuit, directive.gates, line=line)
    if kind == "depth":
        return eval_depth(context.circuit, directive.bound, line=line)
    if kind == "entangled":
        if context.statevector is None:
            return AssertionResult(status="error", kind=kind, message="no statevector available", line=line)
        return eval_entangled(context.statevector, directive.qubits, line=line)

    counts = context.counts
    if counts is None:
        return AssertionResult(status="error", kind=kind, message="no measurement counts available", line=line)
    spec = directive.comparison
    if kind == "output":
        return eval_output(counts, directive.bitstring, line=line)
    if kind == "tvd":
        return eval_tvd(counts, directive.distribution, spec, line=line)
    if kind == "hellinger":
        return eval_hellinger(counts, directive.distribution, spec, line=line)
    if kind == "kl":
        return eval_kl(counts, directive.distribution, spec, line=line)
    if kind == "chi2":
        return eval_chi2(counts, directive.distribution, spec, line=line)
    if kind == "marginal":
        return eval_marginal(counts, directive.qubits[0], directive.value, spec, context.measurement_map, line=line)
    if kind == "observable":
        return eval_observable(counts, directive.qubits, spec, context.measurement_map, line=line)
    if kind == "entropy":
        return eval_entropy(counts, spec, line=line)
    if kind == "correlation":
        return eval_correlation(counts, directive.bits[0], directive.bits[1], spec, line=line)
    if kind == "probability":
        return eval_probability(counts, directive.bitstring, spec, line=line)
    if kind == "most_frequent":
        return eval_most_frequent(counts, directive.bitstring, line=line)
    if context.ideal is None:
        return AssertionResult(status="error", kind=kind, message="no ideal distribution available", line=line)
    return eval_fidelity(counts, context.ideal, spec, line=line)


def evaluate_all(directives: Iterable[AssertionDirective], context: EvaluationContext) -> List[AssertionResult]:
    return [evaluate(directive, context) for directive in directives]
