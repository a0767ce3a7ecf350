"""
Parser for `//%` directive lines.

Every pragma line parses to exactly one ConfigDirective, AssertionDirective or
Diagnostic. See docs/PRAGMAS.md for the grammar.
"""
import difflib
import json
import math
import re
from typing import Dict, Iterable, List, Optional, Tuple, Union

from pydantic import ValidationError

from pragmatest.models import (
    AssertionDirective,
    ComparisonSpec,
    ConfigDirective,
    Diagnostic,
    Distribution,
    PragmaLine,
    TestConfig,
)

PRAGMA_PREFIX = "//%"

CONFIG_KEYS = ("shots", "seed", "backend", "runtime", "runtime_version")
BACKENDS = ("ideal", "noisy", "hardware")

STANDARD_OPERATORS = ("<", "<=", "==", ">", ">=", "!=")
ALL_OPERATORS = STANDARD_OPERATORS + ("~=",)

ALLOWED_OPERATORS: Dict[str, Tuple[str, ...]] = {
    "output": ("==",),
    "most_frequent": ("==",),
    "tvd": STANDARD_OPERATORS,
    "hellinger": STANDARD_OPERATORS,
    "kl": STANDARD_OPERATORS,
    "chi2": STANDARD_OPERATORS,
    "marginal": ("~=",),
    "correlation": ("~=",),
    "probability": ("~=",),
    "observable": ALL_OPERATORS,
    "entropy": ALL_OPERATORS,
    "fidelity": ALL_OPERATORS,
    "depth": ("<=",),
}

GRAMMAR: Dict[str, str] = {
    "shots": "shots: <positive integer>",
    "seed": "seed: <non-negative integer> | random",
    "backend": "backend: ideal | noisy | hardware",
    "runtime": "runtime: <identifier>",
    "runtime_version": 'runtime_version: "<v>(, <v>)*"',
    "output": 'assert.output: == "<bits>"',
    "tvd": 'assert.tvd: {"<bits>": <p>, ...} <op> <real>',
    "hellinger": 'assert.hellinger: {"<bits>": <p>, ...} <op> <real>',
    "kl": 'assert.kl: {"<bits>": <p>, ...} <op> <real>',
    "chi2": 'assert.chi2: {"<bits>": <p>, ...} <op> <real>',
    "marginal": "assert.marginal: q[<i>] == <0|1> ~= <real> atol=<real>",
    "observable": "assert.observable: Z[<i>(,<j>)*] (<op> <real> | ~= <real> atol=<real>)",
    "entropy": "assert.entropy: (<op> <real> | ~= <real> atol=<real>)",
    "correlation": "assert.correlation: m[<i>], m[<j>] ~= <real> atol=<real>",
    "probability": 'assert.probability: "<bits>" ~= <real> atol=<real>',
    "most_frequent": 'assert.most_frequent: == "<bits>"',
    "fidelity": "assert.fidelity: (<op> <real> | ~= <real> atol=<real>)",
    "entangled": "assert.entangled: [<i>(,<j>)*]",
    "gate_set": "assert.gate_set: { <ident>(, <ident>)* }",
    "depth": "assert.depth: <= <uint>",
}

ASSERTION_KINDS = tuple(k for k in GRAMMAR if k not in CONFIG_KEYS)
KNOWN_KEYS = CONFIG_KEYS + tuple(f"assert.{kind}" for kind in ASSERTION_KINDS)

DISTRIBUTION_KINDS = ("tvd", "hellinger", "kl", "chi2")
SUM_TOLERANCE = 1e-6

_OPERATOR_RE = re.compile(r"^(?P<op>[^\s\d.+\-\"]+)\s*(?P<rest>.*)$")
_APPROX_RE = re.compile(r"^(?P<value>\S+)\s+atol\s*=\s*(?P<atol>\S+)$")
_UINT_RE = re.compile(r"^\d[\d_]*$")
_INDEX_LIST = r"\d+(?:\s*,\s*\d+)*"
_MARGINAL_RE = re.compile(r"^q\s*\[\s*(?P<qubit>\d+)\s*\]\s*==\s*(?P<value>[01])\s*(?P<cmp>.*)$")
_OBSERVABLE_RE = re.compile(rf"^Z\s*\[\s*(?P<qubits>{_INDEX_LIST})\s*\]\s*(?P<cmp>.*)$")
_CORRELATION_RE = re.compile(r"^m\s*\[\s*(?P<i>\d+)\s*\]\s*,\s*m\s*\[\s*(?P<j>\d+)\s*\]\s*(?P<cmp>.*)$")
_PROBABILITY_RE = re.compile(r'^"(?P<bits>[01]+)"\s*(?P<cmp>.*)$')
_BITS_RE = re.compile(r'^"(?P<bits>[01]+)"$')
_ENTANGLED_RE = re.compile(rf"^\[\s*(?P<qubits>{_INDEX_LIST})\s*\]$")
_GATE_SET_RE = re.compile(r"^\{\s*(?P<gates>[A-Za-z_]\w*(?:\s*,\s*[A-Za-z_]\w*)*)?\s*\}$")
_VERSION_RE = re.compile(r"^[A-Za-z0-9][\w.+\-]*$")
_RUNTIME_RE = re.compile(r"^[A-Za-z_][\w\-]*$")

Directive = Union[ConfigDirective, AssertionDirective]


class _PragmaProblem(Exception):
    def __init__(self, code: str, message: str, hint: str = ""):
        super().__init__(message)
        self.code = code
        self.message = message
        self.hint = hint


def _malformed(kind: str, message: str) -> _PragmaProblem:
    return _PragmaProblem("QT003", message, f"expected {GRAMMAR[kind]}")


def _parse_real(kind: str, text: str) -> float:
    try:
        value = float(text.replace("_", ""))
    except ValueError:
        raise _malformed(kind, f"{text!r} is not a number")
    if not math.isfinite(value):
        raise _malformed(kind, f"{text!r} is not a finite number")
    return value


def _parse_uint(kind: str, text: str) -> int:
    if not _UINT_RE.match(text):
        raise _malformed(kind, f"{text!r} is not a non-negative integer")
    return int(text.replace("_", ""))


def _parse_index_list(kind: str, text: str) -> List[int]:
    indices = [int(part) for part in re.split(r"\s*,\s*", text.strip())]
    if len(set(indices)) != len(indices):
        raise _malformed(kind, "index list repeats an entry")
    return indices


def parse_comparison(kind: str, text: str) -> ComparisonSpec:
    text = text.strip()
    allowed = ALLOWED_OPERATORS[kind]
    match = _OPERATOR_RE.match(text)
    if not match:
        raise _malformed(kind, "missing comparison operator")
    op, rest = match.group("op"), match.group("rest").strip()
    if op not in allowed:
        reason = "unknown operator" if op not in ALL_OPERATORS else f"operator not allowed for {kind}"
        raise _PragmaProblem("QT004", f"{reason} {op!r}", f"valid operators for {kind}: {' '.join(allowed)}")
    if op == "~=":
        approx = _APPROX_RE.match(rest)
        if not approx:
            raise _malformed(kind, "~= requires 'atol=<tolerance>'")
        threshold = _parse_real(kind, approx.group("value"))
        atol = _parse_real(kind, approx.group("atol"))
        if atol <= 0:
            raise _malformed(kind, "atol must be positive")
        return ComparisonSpec(operator=op, threshold=threshold, atol=atol)
    if "atol" in rest:
        raise _malformed(kind, "atol is only valid with ~=")
    if not rest or len(rest.split()) != 1:
        raise _malformed(kind, "expected a single threshold value")
    return ComparisonSpec(operator=op, threshold=_parse_real(kind, rest))


def _parse_distribution(kind: str, text: str) -> Tuple[Distribution, str]:
    text = text.strip()
    end = text.find("}")
    if not text.startswith("{") or end < 0:
        raise _malformed(kind, "reference distribution must be a {...} object")
    try:
        raw = json.loads(text[: end + 1])
    except json.JSONDecodeError as e:
        raise _malformed(kind, f"reference distribution is not valid JSON: {e.msg}")
    if not raw:
        raise _malformed(kind, "reference distribution is empty")
    for key, value in raw.items():
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise _malformed(kind, f"probability of {key!r} is not a number")
    try:
        distribution = Distribution(entries={key: float(value) for key, value in raw.items()})
    except ValidationError as e:
        raise _malformed(kind, e.errors()[0]["msg"].removeprefix("Value error, "))
    total = distribution.total()
    if abs(total - 1.0) > SUM_TOLERANCE:
        raise _PragmaProblem("QT005", f"reference probabilities sum to {total:g}", "probabilities must sum to 1")
    if kind == "chi2" and any(p <= 0 for p in distribution.entries.values()):
        raise _malformed(kind, "chi2 reference outcomes need probability > 0")
    return distribution, text[end + 1:]


def _parse_equals_bits(kind: str, text: str) -> str:
    match = _OPERATOR_RE.match(text.strip())
    if not match:
        raise _malformed(kind, 'expected == "<bits>"')
    op = match.group("op")
    if op not in ALLOWED_OPERATORS[kind]:
        raise _PragmaProblem("QT004", f"operator {op!r} not allowed for {kind}", f"valid operators for {kind}: ==")
    bits = _BITS_RE.match(match.group("rest").strip())
    if not bits:
        raise _malformed(kind, "expected a quoted bitstring of 0s and 1s")
    return bits.group("bits")


def _parse_assertion(kind: str, value: str, line: int, raw: str) -> AssertionDirective:
    fields: Dict[str, object] = {"kind": kind, "line": line, "raw": raw}
    if kind in ("output", "most_frequent"):
        fields["bitstring"] = _parse_equals_bits(kind, value)
    elif kind in DISTRIBUTION_KINDS:
        fields["distribution"], rest = _parse_distribution(kind, value)
        fields["comparison"] = parse_comparison(kind, rest)
    elif kind == "marginal":
        match = _MARGINAL_RE.match(value)
        if not match:
            raise _malformed(kind, "could not parse marginal assertion")
        fields.update(qubits=[int(match.group("qubit"))], value=int(match.group("value")),
                      comparison=parse_comparison(kind, match.group("cmp")))
    elif kind == "observable":
        match = _OBSERVABLE_RE.match(value)
        if not match:
            raise _malformed(kind, "could not parse observable assertion")
        fields.update(qubits=_parse_index_list(kind, match.group("qubits")),
                      comparison=parse_comparison(kind, match.group("cmp")))
    elif kind in ("entropy", "fidelity"):
        fields["comparison"] = parse_comparison(kind, value)
    elif kind == "correlation":
        match = _CORRELATION_RE.match(value)
        if not match:
            raise _malformed(kind, "could not parse correlation assertion")
        i, j = int(match.group("i")), int(match.group("j"))
        if i == j:
            raise _malformed(kind, "correlation needs two different bits")
        fields.update(bits=[i, j], comparison=parse_comparison(kind, match.group("cmp")))
    elif kind == "probability":
        match = _PROBABILITY_RE.match(value)
        if not match:
            raise _malformed(kind, "could not parse probability assertion")
        fields.update(bitstring=match.group("bits"), comparison=parse_comparison(kind, match.group("cmp")))
    elif kind == "entangled":
        match = _ENTANGLED_RE.match(value)
        if not match:
            raise _malformed(kind, "expected a bracketed qubit list")
        fields["qubits"] = _parse_index_list(kind, match.group("qubits"))
    elif kind == "gate_set":
        match = _GATE_SET_RE.match(value)
        if not match:
            raise _malformed(kind, "expected a braced list of gate names")
        names = match.group("gates")
        fields["gates"] = re.split(r"\s*,\s*", names.strip()) if names else []
    elif kind == "depth":
        comparison = parse_comparison(kind, value)
        if not comparison.threshold.is_integer() or comparison.threshold < 0:
            raise _malformed(kind, "depth bound must be a non-negative integer")
        fields.update(comparison=comparison, bound=int(comparison.threshold))
    return AssertionDirective(**fields)


def _parse_config(key: str, value: str, line: int) -> ConfigDirective:
    if key == "shots":
        shots = _parse_uint(key, value)
        if shots < 1:
            raise _malformed(key, "shots must be at least 1")
        return ConfigDirective(key=key, value=shots, line=line)
    if key == "seed":
        if value.lower() == "random":
            return ConfigDirective(key=key, value=None, line=line)
        return ConfigDirective(key=key, value=_parse_uint(key, value), line=line)
    if key == "backend":
        if value not in BACKENDS:
            raise _malformed(key, f"unknown backend {value!r}")
        return ConfigDirective(key=key, value=value, line=line)
    if key == "runtime":
        if not _RUNTIME_RE.match(value):
            raise _malformed(key, f"{value!r} is not a runtime name")
        return ConfigDirective(key=key, value=value, line=line)
    if not (len(value) >= 2 and value.startswith('"') and value.endswith('"')):
        raise _malformed(key, "versions must be a quoted, comma-separated list")
    versions = [v.strip() for v in value[1:-1].split(",")]
    if not all(v and _VERSION_RE.match(v) for v in versions):
        raise _malformed(key, "every listed version must start with a letter or digit")
    if len(set(versions)) != len(versions):
        raise _malformed(key, "a version is listed twice")
    return ConfigDirective(key=key, value=versions, line=line)


def parse_pragma_line(raw: str, line: int) -> Union[ConfigDirective, AssertionDirective, Diagnostic]:
    text = raw.strip()
    body = text[len(PRAGMA_PREFIX):].strip() if text.startswith(PRAGMA_PREFIX) else text
    try:
        if not body:
            raise _PragmaProblem("QT003", "empty directive", "expected '<key>: <value>'")
        key, sep, value = body.partition(":")
        key, value = key.strip(), value.strip()
        if key not in KNOWN_KEYS:
            candidate = key if sep else body.split()[0]
            if not sep and candidate in KNOWN_KEYS:
                raise _PragmaProblem("QT003", f"missing ':' after {candidate!r}", f"write '{candidate}: <value>'")
            nearest = difflib.get_close_matches(candidate, KNOWN_KEYS, n=1, cutoff=0.5)
            hint = f"did you mean {nearest[0]!r}?" if nearest else f"known keys: {', '.join(KNOWN_KEYS)}"
            raise _PragmaProblem("QT002", f"unknown directive {candidate!r}", hint)
        if not value:
            name = key.removeprefix("assert.")
            raise _malformed(name, f"missing value for {key!r}")
        if key in CONFIG_KEYS:
            return _parse_config(key, value, line)
        return _parse_assertion(key.removeprefix("assert."), value, line, text)
    except _PragmaProblem as problem:
        return Diagnostic(severity="error", code=problem.code, line=line, message=problem.message, hint=problem.hint)


def parse_pragmas(
    pragma_lines: Iterable[PragmaLine],
) -> Tuple[List[ConfigDirective], List[AssertionDirective], List[Diagnostic]]:
    configs: List[ConfigDirective] = []
    assertions: List[AssertionDirective] = []
    diagnostics: List[Diagnostic] = []
    for pragma in pragma_lines:
        parsed = parse_pragma_line(pragma.text, pragma.line)
        if isinstance(parsed, Diagnostic):
            diagnostics.append(parsed)
        elif isinstance(parsed, ConfigDirective):
            configs.append(parsed)
        else:
            assertions.append(parsed)
    return configs, assertions, diagnostics


def collect_config(directives: Iterable[ConfigDirective], defaults: Optional[TestConfig] = None) -> TestConfig:
    """Apply directives over the documented defaults"""
    values = (defaults or TestConfig()).model_dump()
    for directive in directives:
        if directive.key == "runtime_version":
            values["runtime_versions"] = list(directive.value)
        else:
            values[directive.key] = directive.value
    return TestConfig(**values)
