"""
Test runner: collection, runtime grouping and probing, per-test execution and
aggregation into a RunReport.

Execution of one test runs in fixed phases:
  1. inline the body and build the circuit
  2. structural assertions (gate_set, depth), before any simulation
  3. shot sampling, when a counts-based assertion exists
  4. measurement-free statevector and ideal distribution, when needed
  5. remaining assertions in directive order
A failing phase marks the test as errored and skips the later phases, but
results already produced are kept.
"""
import hashlib
import secrets
import time
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from typing import Dict, Iterable, List, Optional, Tuple

from loguru import logger

from pragmatest import __version__
from pragmatest.exceptions import CompatibilityError, PragmatestError, SimulationError
from pragmatest.models import (
    AssertionResult,
    Circuit,
    ExecutionGroup,
    ProbeRecord,
    RunOptions,
    RunReport,
    TestCase,
    TestConfig,
    TestResult,
)
from pragmatest.services.assertion_service import COUNTS_KINDS, EvaluationContext, evaluate
from pragmatest.services.discovery_service import SourceFile, discover
from pragmatest.services.inliner_service import build_circuit, inline
from pragmatest.services.lint_service import lint_source
from pragmatest.services.pragma_service import collect_config, parse_pragmas
from pragmatest.services.probe_cache_service import ProbeCacheService
from pragmatest.services.qasm_parser_service import list_tests
from pragmatest.services.simulator_service import SimulatorService, measurement_free, operation

NATIVE_RUNTIME = "native"
PROBE_SHOTS = 16
COLLECT_PSEUDO_TEST = "collect"


# -- collection ------------------------------------------------------------

def collect_tests(
    sources: Iterable[SourceFile], active_runtime: str = NATIVE_RUNTIME
) -> Tuple[List[TestCase], List[TestResult]]:
    """
    Build a TestCase for every test subroutine.

    Files with lint errors still yield their tests, carrying the errors so
    that each one reports as errored. A broken file with no recoverable test
    yields a single errored pseudo-test named "collect".
    """
    defaults = TestConfig(runtime=active_runtime)
    tests: List[TestCase] = []
    broken: List[TestResult] = []
    for file_index, source in enumerate(sources):
        errors = tuple(d for d in lint_source(source) if d.is_error)
        subs = list_tests(source.program)
        if errors and not subs:
            broken.append(TestResult(
                test_name=COLLECT_PSEUDO_TEST, file_path=source.path, runtime_label=active_runtime,
                status="error", message="; ".join(d.format() for d in errors),
            ))
            continue
        for test_index, sub in enumerate(subs):
            configs, assertions, _ = parse_pragmas(sub.pragma_lines)
            tests.append(TestCase(
                path=source.path,
                program=source.program,
                subroutine=sub,
                config=collect_config(configs, defaults),
                assertions=tuple(assertions),
                file_index=file_index,
                test_index=test_index,
                blocking_diagnostics=errors,
            ))
    logger.info(f"Collected {len(tests)} test(s)")
    return tests, broken


def select(tests: Iterable[TestCase], keyword: Optional[str]) -> List[TestCase]:
    if not keyword:
        return list(tests)
    return [test for test in tests if keyword in test.name]


# -- grouping and probing --------------------------------------------------

def plan(tests: Iterable[TestCase]) -> List[ExecutionGroup]:
    """One group per (runtime, version); groups and members keep discovery order"""
    groups: Dict[Tuple[str, Optional[str]], ExecutionGroup] = {}
    for test in tests:
        versions = test.config.runtime_versions or [None]
        for version in versions:
            key = (test.config.runtime, version)
            if key not in groups:
                groups[key] = ExecutionGroup(runtime=test.config.runtime, version=version)
            groups[key].tests.append(test)
    return list(groups.values())


def probe_circuit() -> Circuit:
    return Circuit(1, (operation("x", 0), operation("measure", 0, clbit=0)), 1, {0: 0})


def probe_runtime(
    runtime: str,
    version: Optional[str] = None,
    simulator: Optional[SimulatorService] = None,
    cache: Optional[ProbeCacheService] = None,
) -> ProbeRecord:
    """Run X-then-measure and require every shot to read 1; raises CompatibilityError otherwise"""
    oracle_counts: Dict[str, int] = {}
    try:
        if runtime != NATIVE_RUNTIME:
            raise CompatibilityError(f"runtime {runtime!r} not supported by this build")
        if version is not None and version != __version__:
            raise CompatibilityError(
                f"runtime not supported by this build: native@{version} (installed {__version__})"
            )
        counts = (simulator or SimulatorService()).run_shots(
            probe_circuit(), TestConfig(shots=PROBE_SHOTS, seed=0)
        )
        oracle_counts = dict(counts.entries)
        if oracle_counts != {"1": PROBE_SHOTS}:
            raise CompatibilityError(f"probe oracle violated: expected all '1', observed {oracle_counts}",
                                     oracle_counts)
    except CompatibilityError as e:
        record = ProbeRecord(runtime=runtime, version=version, status="error", timestamp=_now(),
                             oracle_counts=e.oracle_counts or oracle_counts, message=str(e))
        if cache is not None:
            cache.record(record)
        logger.error(f"Compatibility probe failed for {runtime}@{version or 'active'}: {e}")
        raise
    except PragmatestError as e:
        if cache is not None:
            cache.record(ProbeRecord(runtime=runtime, version=version, status="error", timestamp=_now(),
                                     message=str(e)))
        raise CompatibilityError(f"probe could not run: {e}") from e

    record = ProbeRecord(runtime=runtime, version=version, status="ok", timestamp=_now(),
                         oracle_counts=oracle_counts)
    if cache is not None:
        cache.record(record)
    logger.debug(f"Probe ok for {runtime}@{version or 'active'}")
    return record


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


# -- execution -------------------------------------------------------------

def derive_seed(master_seed: int, path: str, name: str, label: str) -> int:
    digest = hashlib.sha256(f"{master_seed}|{path}|{name}|{label}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def execute_test(
    test: TestCase,
    runtime_label: str = NATIVE_RUNTIME,
    master_seed: int = 0,
    simulator: Optional[SimulatorService] = None,
) -> TestResult:
    simulator = simulator or SimulatorService()
    start = time.perf_counter()
    seed = test.config.seed if test.config.seed is not None else derive_seed(
        master_seed, test.path, test.name, runtime_label
    )
    results: List[AssertionResult] = []
    setup_error: Optional[str] = None

    if test.blocking_diagnostics:
        setup_error = "; ".join(d.format() for d in test.blocking_diagnostics)
    else:
        try:
            flat = inline(test.subroutine, test.program)
            circuit = build_circuit(flat)
            context = EvaluationContext(circuit=circuit, measurement_map=dict(flat.measurement_map))

            structural = [a for a in test.assertions if a.is_structural]
            remaining = [a for a in test.assertions if not a.is_structural]
            results.extend(evaluate(a, context) for a in structural)

            if remaining and test.config.backend == "hardware":
                raise SimulationError("hardware backend reserved for future integration")
            if any(a.kind in COUNTS_KINDS for a in remaining):
                context.counts = simulator.run_shots(circuit, test.config.model_copy(update={"seed": seed}))
            if any(a.kind == "entangled" for a in remaining):
                context.statevector = simulator.statevector(measurement_free(circuit))
            if any(a.kind == "fidelity" for a in remaining):
                context.ideal = simulator.ideal_distribution(circuit)
            results.extend(evaluate(a, context) for a in remaining)
        except PragmatestError as e:
            setup_error = str(e)
            logger.error(f"{test.path}::{test.name}[{runtime_label}]: {e}")
        except Exception as e:
            setup_error = f"internal error: {e}"
            logger.exception(f"{test.path}::{test.name}[{runtime_label}] crashed")

    return TestResult(
        test_name=test.name,
        file_path=test.path,
        runtime_label=runtime_label,
        seed_used=seed,
        assertion_results=results,
        status=TestResult.status_for(results, setup_error is not None),
        duration_seconds=time.perf_counter() - start,
        message=setup_error or "",
    )


def _probe_failure(test: TestCase, label: str, error: CompatibilityError) -> TestResult:
    return TestResult(
        test_name=test.name, file_path=test.path, runtime_label=label, status="error",
        message=f"compatibility probe failed for {label}: {error}",
    )


def run(
    paths: Iterable[str],
    options: Optional[RunOptions] = None,
    simulator: Optional[SimulatorService] = None,
    cache: Optional[ProbeCacheService] = None,
) -> RunReport:
    """Discover, execute and aggregate; raises UsageError for missing paths"""
    options = options or RunOptions()
    simulator = simulator or SimulatorService()
    cache = cache or ProbeCacheService(options.home)
    started = time.perf_counter()
    master_seed = options.seed if options.seed is not None else secrets.randbelow(2 ** 32)

    sources = discover(paths)
    tests, results = collect_tests(sources, options.runtime)
    tests = select(tests, options.keyword)
    groups = plan(tests)
    logger.info(f"Running {len(tests)} test(s) in {len(groups)} group(s), master seed {master_seed}")

    setup_errors: List[str] = []
    work: List[Tuple[int, TestCase, str]] = []
    ordered: List[Tuple[Tuple[int, int, int], TestResult]] = []
    for group_index, group in enumerate(groups):
        try:
            probe_runtime(group.runtime, group.version, simulator, cache)
        except CompatibilityError as e:
            setup_errors.append(f"{group.label}: {e}")
            for test in group.tests:
                ordered.append(((test.file_index, test.test_index, group_index), _probe_failure(test, group.label, e)))
            continue
        work.extend((group_index, test, group.label) for test in group.tests)

    def _execute(item: Tuple[int, TestCase, str]) -> Tuple[Tuple[int, int, int], TestResult]:
        group_index, test, label = item
        return (test.file_index, test.test_index, group_index), execute_test(test, label, master_seed, simulator)

    with ThreadPoolExecutor(max_workers=options.jobs) as pool:
        ordered.extend(pool.map(_execute, work))

    ordered.sort(key=lambda pair: pair[0])
    results.extend(result for _, result in ordered)
    results.sort(key=lambda r: r.file_path)
    report = RunReport.from_results(results, time.perf_counter() - started, master_seed, setup_errors)
    logger.info(f"Run finished: {report.passed} passed, {report.failed} failed, {report.errored} errored")
    return report


def exit_code(report: RunReport) -> int:
    return 0 if report.ok else 1
