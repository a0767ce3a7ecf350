"""
Tests for //% directive parsing
"""
import pytest

from pragmatest.models import AssertionDirective, ConfigDirective, Diagnostic, PragmaLine, TestConfig
from pragmatest.services.pragma_service import collect_config, parse_pragma_line, parse_pragmas


def parse(text: str, line: int = 1):
    return parse_pragma_line(text, line)


class TestConfigDirectives:
    """shots, seed, backend, runtime and runtime_version"""

    def test_shots(self):
        directive = parse("//% shots: 10000", 4)

        assert directive == ConfigDirective(key="shots", value=10000, line=4)

    def test_numbers_accept_underscores(self):
        assert parse("//% shots: 10_000").value == 10000

    def test_seed_random_means_unseeded(self):
        directive = parse("//% seed: random")

        assert isinstance(directive, ConfigDirective)
        assert directive.value is None

    def test_runtime_version_list(self):
        directive = parse('//% runtime_version: "1.0.2, 1.1.0"')

        assert directive.key == "runtime_version"
        assert directive.value == ["1.0.2", "1.1.0"]

    @pytest.mark.parametrize("text", [
        "//% shots: 0",
        "//% shots: many",
        "//% seed: -1",
        "//% backend: quantum",
        "//% runtime_version: 1.0",
        '//% runtime_version: "1.0, 1.0"',
    ])
    def test_malformed_config_values(self, text):
        directive = parse(text)

        assert isinstance(directive, Diagnostic)
        assert directive.code == "QT003"
        assert directive.hint.startswith("expected ")

    @pytest.mark.parametrize("versions", ['".."', '"1.0, ../x"', '".hidden"', '""'])
    def test_versions_cannot_name_a_parent_directory(self, versions):
        directive = parse(f"//% runtime_version: {versions}")

        assert isinstance(directive, Diagnostic)
        assert directive.code == "QT003"


class TestAssertionDirectives:
    """Every assertion kind in its documented form"""

    def test_chi2_with_reference_distribution(self):
        directive = parse('//% assert.chi2: {"00": 0.5, "11": 0.5} >= 0.05', 12)

        assert isinstance(directive, AssertionDirective)
        assert directive.kind == "chi2"
        assert directive.line == 12
        assert directive.distribution.entries == {"00": 0.5, "11": 0.5}
        assert directive.comparison.operator == ">="
        assert directive.comparison.threshold == 0.05

    @pytest.mark.parametrize("text, kind", [
        ('//% assert.output: == "01"', "output"),
        ('//% assert.tvd: {"0": 0.5, "1": 0.5} < 0.05', "tvd"),
        ('//% assert.hellinger: {"0": 1.0} <= 0.1', "hellinger"),
        ('//% assert.kl: {"0": 0.25, "1": 0.75} < 0.01', "kl"),
        ("//% assert.marginal: q[1] == 0 ~= 0.5 atol=0.05", "marginal"),
        ("//% assert.observable: Z[0, 1] == 1", "observable"),
        ("//% assert.observable: Z[2] ~= -1 atol=0.1", "observable"),
        ("//% assert.entropy: >= 0.9", "entropy"),
        ("//% assert.correlation: m[0], m[1] ~= 1.0 atol=1e-9", "correlation"),
        ('//% assert.probability: "00" ~= 0.5 atol=0.05', "probability"),
        ('//% assert.most_frequent: == "000"', "most_frequent"),
        ("//% assert.fidelity: ~= 1 atol=0.01", "fidelity"),
        ("//% assert.entangled: [0, 2]", "entangled"),
        ("//% assert.gate_set: {h, cx, measure}", "gate_set"),
        ("//% assert.gate_set: {}", "gate_set"),
        ("//% assert.depth: <= 3", "depth"),
    ])
    def test_documented_forms_parse(self, text, kind):
        directive = parse(text)

        assert isinstance(directive, AssertionDirective), directive
        assert directive.kind == kind
        assert directive.raw == text

    def test_structured_fields(self):
        marginal = parse("//% assert.marginal: q[1] == 0 ~= 0.5 atol=0.05")
        observable = parse("//% assert.observable: Z[0, 1] == 1")
        gate_set = parse("//% assert.gate_set: {h, cx, measure}")
        depth = parse("//% assert.depth: <= 3")

        assert (marginal.qubits, marginal.value) == ([1], 0)
        assert marginal.comparison.atol == 0.05
        assert observable.qubits == [0, 1]
        assert gate_set.gates == ["h", "cx", "measure"]
        assert depth.bound == 3


class TestPragmaDiagnostics:
    """Each problem maps to one code with a hint"""

    def test_unknown_key_suggests_nearest(self):
        directive = parse("//% shotz: 100", 6)

        assert (directive.code, directive.line) == ("QT002", 6)
        assert directive.hint == "did you mean 'shots'?"

    def test_unknown_assertion_kind_suggests_nearest(self):
        directive = parse('//% assert.tvdd: {"0": 1.0} < 0.1')

        assert directive.code == "QT002"
        assert "assert.tvd" in directive.hint

    def test_unknown_operator_lists_valid_ones(self):
        directive = parse('//% assert.tvd: {"0": 0.5, "1": 0.5} ~~ 0.1')

        assert directive.code == "QT004"
        assert directive.hint == "valid operators for tvd: < <= == > >= !="

    def test_operator_not_allowed_for_kind(self):
        directive = parse("//% assert.depth: < 3")

        assert directive.code == "QT004"
        assert directive.hint == "valid operators for depth: <="

    def test_reference_that_does_not_sum_to_one(self):
        directive = parse('//% assert.tvd: {"0": 0.6, "1": 0.6} < 0.1')

        assert directive.code == "QT005"
        assert "1.2" in directive.message
        assert directive.hint == "probabilities must sum to 1"

    def test_approximate_comparison_needs_atol(self):
        directive = parse("//% assert.entropy: ~= 1.0")

        assert directive.code == "QT003"

    def test_atol_only_with_approximate_comparison(self):
        directive = parse("//% assert.entropy: < 1.0 atol=0.1")

        assert directive.code == "QT003"

    @pytest.mark.parametrize("text", [
        "//%",
        "//% :",
        "//% assert.output",
        "//% shots 100",
        "//% assert.depth: <= 2.5",
        "//% assert.entangled: [0, 0]",
        "//% assert.entangled: 0",
        "//% assert.marginal: q[0] == 2 ~= 0.5 atol=0.1",
        '//% assert.chi2: {"0": 1.0, "1": 0.0} >= 0.05',
        '//% assert.tvd: {"0": 0.5, "11": 0.5} < 0.1',
        '//% assert.tvd: {"0": 0.5, "1": 0.5',
        "//% assert.correlation: m[0], m[0] ~= 1 atol=0.1",
        "//% assert.probability: 00 ~= 0.5 atol=0.1",
        "//% assert.fidelity: >= nan",
        "//% assert.observable: Z[0] ~= 1 atol=0",
        "//% assert.output: != \"1\"",
        "//% assert.unknown_thing: 3",
    ])
    def test_every_line_yields_a_single_result(self, text):
        """Test malformed lines produce a diagnostic rather than raising"""
        directive = parse(text)

        assert isinstance(directive, Diagnostic)
        assert directive.code in {"QT002", "QT003", "QT004", "QT005"}
        assert directive.hint


class TestCollectConfig:
    """Directives layered over defaults"""

    def test_defaults(self):
        config = collect_config([])

        assert config == TestConfig()
        assert (config.shots, config.seed, config.backend, config.runtime) == (1024, None, "ideal", "native")
        assert config.runtime_versions == []

    def test_directives_override_defaults(self):
        configs, assertions, diagnostics = parse_pragmas([
            PragmaLine(1, "//% shots: 50"),
            PragmaLine(2, "//% seed: 9"),
            PragmaLine(3, "//% backend: noisy"),
            PragmaLine(4, '//% runtime_version: "2.0"'),
            PragmaLine(5, '//% assert.output: == "1"'),
        ])

        config = collect_config(configs)

        assert diagnostics == []
        assert len(assertions) == 1
        assert config.shots == 50
        assert config.seed == 9
        assert config.backend == "noisy"
        assert config.runtime_versions == ["2.0"]

    def test_active_runtime_default_is_kept(self):
        config = collect_config([], TestConfig(runtime="other"))

        assert config.runtime == "other"
