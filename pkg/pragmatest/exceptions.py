"""
Exception hierarchy for pragmatest.

Parsing and linting never raise; they report Diagnostics. Everything from
inlining onwards raises one of these, and the runner turns them into
errored test results.
"""


class PragmatestError(Exception):
    """Base class for all framework errors"""


class InlineError(PragmatestError):
    """A call could not be expanded (unknown callee, arity, recursion, collision)"""


class CircuitError(PragmatestError):
    """The flattened body cannot be turned into a valid circuit"""


class SimulationError(PragmatestError):
    """The simulator refused to execute a circuit"""


class EvaluationError(PragmatestError):
    """An assertion could not be evaluated (as opposed to evaluating to false)"""


class CompatibilityError(PragmatestError):
    """A runtime failed its compatibility probe or is not supported"""

    def __init__(self, message: str, oracle_counts: dict | None = None):
        super().__init__(message)
        self.oracle_counts = oracle_counts or {}


class UsageError(PragmatestError):
    """Bad command-line usage (missing paths, unwritable report destination)"""
