"""
pragmatest command line: lint, collect and run OpenQASM 3 test files.
"""
import sys
from typing import List, Optional, Sequence

import click

from pragmatest import __version__
from pragmatest.config import configure_logging, load_settings
from pragmatest.exceptions import UsageError
from pragmatest.models import ConsoleOptions, Diagnostic, RunOptions
from pragmatest.services import lint_service, runner_service
from pragmatest.services.discovery_service import SourceFile, discover
from pragmatest.services.report_service import check_writable, render_console, supports_unicode, write_junit_xml

SEVERITY_COLORS = {"error": "red", "warning": "yellow"}
LOG_LEVELS = click.Choice(["TRACE", "DEBUG", "INFO", "SUCCESS", "WARNING", "ERROR", "CRITICAL"], case_sensitive=False)


def _discover(paths: Sequence[str]) -> List[SourceFile]:
    try:
        return discover(paths)
    except UsageError as e:
        raise click.UsageError(str(e))


def _format_diagnostic(diagnostic: Diagnostic, color: bool) -> str:
    text = diagnostic.format()
    return click.style(text, fg=SEVERITY_COLORS[diagnostic.severity]) if color else text


def _color_enabled(no_color: bool) -> bool:
    return not (no_color or load_settings().no_color)


@click.group()
@click.version_option(__version__, prog_name="pragmatest")
def cli():
    """Native unit tests for OpenQASM 3 programs"""


@cli.command()
@click.argument("paths", nargs=-1, required=True)
@click.option("--no-color", is_flag=True, help="Disable colored output")
@click.option("--log-level", type=LOG_LEVELS, default=None, help="Log level for diagnostics on stderr")
@click.pass_context
def lint(ctx: click.Context, paths: Sequence[str], no_color: bool, log_level: Optional[str]):
    """Check .qasm files and their //% directives without running anything"""
    configure_logging(log_level)
    sources = _discover(paths)
    diagnostics = lint_service.lint(sources)
    color = _color_enabled(no_color)
    for diagnostic in diagnostics:
        click.echo(_format_diagnostic(diagnostic, color))
    errors = sum(1 for d in diagnostics if d.is_error)
    warnings = len(diagnostics) - errors
    click.echo(f"{errors} error(s), {warnings} warning(s) in {len(sources)} file(s)")
    ctx.exit(1 if errors else 0)


@cli.command()
@click.argument("paths", nargs=-1, required=True)
@click.option("-k", "--keyword", default=None, help="Only collect tests whose name contains KEYWORD")
@click.option("--log-level", type=LOG_LEVELS, default=None, help="Log level for diagnostics on stderr")
@click.pass_context
def collect(ctx: click.Context, paths: Sequence[str], keyword: Optional[str], log_level: Optional[str]):
    """List discovered tests without running them"""
    configure_logging(log_level)
    settings = load_settings()
    tests, broken = runner_service.collect_tests(_discover(paths), settings.runtime)
    tests = runner_service.select(tests, keyword)
    for group in runner_service.plan(tests):
        for test in group.tests:
            click.echo(f"{test.path}::{test.name}[{group.label}]")
    for result in broken:
        click.echo(f"{result.file_path}: collection error: {result.message}", err=True)
    click.echo(f"{len(tests)} test(s) collected")
    ctx.exit(1 if broken else 0)


@cli.command()
@click.argument("paths", nargs=-1, required=True)
@click.option("-v", "--verbose", is_flag=True, help="Show every assertion, not only failing ones")
@click.option("--junit-xml", "junit_xml", type=click.Path(dir_okay=False), default=None,
              help="Write a JUnit XML report to FILE")
@click.option("--seed", type=click.IntRange(min=0), default=None, help="Master seed for tests with 'seed: random'")
@click.option("--jobs", "-j", type=click.IntRange(min=1), default=None, help="Number of worker threads")
@click.option("-k", "--keyword", default=None, help="Only run tests whose name contains KEYWORD")
@click.option("--no-color", is_flag=True, help="Disable colored output")
@click.option("--log-level", type=LOG_LEVELS, default=None, help="Log level for diagnostics on stderr")
@click.pass_context
def run(
    ctx: click.Context,
    paths: Sequence[str],
    verbose: bool,
    junit_xml: Optional[str],
    seed: Optional[int],
    jobs: Optional[int],
    keyword: Optional[str],
    no_color: bool,
    log_level: Optional[str],
):
    """Execute the tests found under PATHS"""
    configure_logging(log_level)
    settings = load_settings()
    try:
        if junit_xml:
            check_writable(junit_xml)
        options = RunOptions(seed=seed, jobs=jobs or settings.jobs, keyword=keyword,
                             home=settings.home, runtime=settings.runtime)
        report = runner_service.run(paths, options)
    except UsageError as e:
        raise click.UsageError(str(e))

    stdout = click.get_text_stream("stdout")
    console = ConsoleOptions(verbose=verbose, color=_color_enabled(no_color),
                             unicode=supports_unicode(getattr(stdout, "encoding", None)))
    click.echo(render_console(report, console), nl=False)

    if junit_xml:
        try:
            write_junit_xml(report, junit_xml)
        except UsageError as e:
            raise click.UsageError(str(e))
    ctx.exit(runner_service.exit_code(report))


def cli_main(argv: Optional[Sequence[str]] = None) -> int:
    """Run the CLI and return its exit code instead of exiting"""
    try:
        result = cli.main(args=list(argv) if argv is not None else None, prog_name="pragmatest",
                          standalone_mode=False)
    except click.ClickException as e:
        e.show()
        return e.exit_code
    except click.Abort:
        click.echo("Aborted!", err=True)
        return 1
    return result if isinstance(result, int) else 0


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
