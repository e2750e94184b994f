"""CLI entry point for povm-ascent."""

from __future__ import annotations

import logging
from pathlib import Path

import click
import numpy as np
from rich.console import Console
from rich.logging import RichHandler

from . import __version__
from .ensembles import ENSEMBLES, get_ensemble
from .errors import DimensionMismatch, InvalidEnsemble, ParseError, RankDeficient
from .info import holevo_bound
from .io import ImportFile, read_import, save_json_report, write_import, write_output
from .model import Ensemble, validate_ensemble
from .optimizer import OptimizerConfig, run as run_optimizer
from .reduce import DEFAULT_MERGE_TOL
from .reporter import print_report

console = Console()
err_console = Console(stderr=True)

PROGRESS_EVERY = 100
ENVVAR_PREFIX = "POVM_ASCENT"

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_MAX_ITER = 2


def _entropy_seed() -> int:
    """Fresh unsigned 64-bit seed from OS entropy."""
    return int(np.random.SeedSequence().generate_state(1, dtype=np.uint64)[0])


def _configure_logging(verbose: bool) -> None:
    if verbose:
        logging.basicConfig(
            level=logging.DEBUG,
            format="%(message)s",
            handlers=[RichHandler(console=err_console, show_path=False)],
            force=True,
        )


def _load_ensemble(input_path: str) -> tuple[ImportFile, Ensemble]:
    """Read and validate an import file, exiting with status 1 on any problem."""
    try:
        imported = read_import(input_path)
    except (ParseError, DimensionMismatch) as exc:
        err_console.print(f"[red]Cannot read {input_path}: {exc}[/]")
        raise SystemExit(EXIT_ERROR)
    except (OSError, UnicodeDecodeError) as exc:
        err_console.print(f"[red]Cannot open {input_path}: {exc}[/]")
        raise SystemExit(EXIT_ERROR)

    ensemble = imported.to_ensemble()
    report = validate_ensemble(ensemble)
    if not report.is_valid:
        err_console.print(f"[red]Invalid ensemble in {input_path}:[/]")
        for violation in report.violations:
            err_console.print(f"[red]  - {violation.message}[/]")
        err_console.print(
            "[dim]Operators must be hermitian with nonnegative eigenvalues; "
            "their traces are their statistical weights, which must add to unity.[/]"
        )
        raise SystemExit(EXIT_ERROR)
    return imported, ensemble


@click.group(context_settings={"auto_envvar_prefix": ENVVAR_PREFIX})
@click.version_option(version=__version__, prog_name="povm-ascent")
def cli() -> None:
    """povm-ascent: accessible information by iterative POVM ascent."""


@cli.command()
@click.option(
    "--input", "-i", "input_path", required=True,
    type=click.Path(dir_okay=False), help="Import file with the ensemble",
)
@click.option(
    "--output", "-o", "output_path", default=None,
    help="Output file (defaults to the input name with a .out suffix)",
)
@click.option(
    "--seed", type=click.IntRange(0, 2**64 - 1), default=None,
    help="RNG seed (defaults to OS entropy; always written to the output)",
)
@click.option(
    "--tolerance", type=click.FloatRange(min=0.0), default=1e-9, show_default=True,
    help="Relative tolerance in the mutual information",
)
@click.option(
    "--steepest-prob", type=click.FloatRange(0.0, 1.0), default=0.02, show_default=True,
    help="Chance of using the plain gradient instead of the conjugate one",
)
@click.option("--max-iter", type=click.IntRange(min=1), default=10000, show_default=True)
@click.option("--restarts", type=click.IntRange(min=1), default=1, show_default=True)
@click.option(
    "--k-init", type=click.IntRange(min=1), default=None,
    help="Initial number of POVM outcomes (overrides K from the input file)",
)
@click.option(
    "--merge-tol", type=click.FloatRange(min=0.0), default=DEFAULT_MERGE_TOL, show_default=True,
    help="Relative tolerance for merging equivalent outcomes",
)
@click.option(
    "--json", "json_out", is_flag=True, help="Also write a JSON report next to the output file"
)
@click.option("--quiet", "-q", is_flag=True, help="No progress or summary on the terminal")
@click.option("--verbose", "-v", is_flag=True, help="Debug logging to standard error")
def run(
    input_path: str,
    output_path: str | None,
    seed: int | None,
    tolerance: float,
    steepest_prob: float,
    max_iter: int,
    restarts: int,
    k_init: int | None,
    merge_tol: float,
    json_out: bool,
    quiet: bool,
    verbose: bool,
) -> None:
    """Find the POVM that maximizes the mutual information for an ensemble.

    Exit status: 0 converged, 2 stopped at --max-iter, 1 on bad input.
    """
    _configure_logging(verbose)
    imported, ensemble = _load_ensemble(input_path)

    cfg = OptimizerConfig(
        steepest_prob=steepest_prob,
        tolerance=tolerance,
        seed=_entropy_seed() if seed is None else seed,
        max_iterations=max_iter,
        restarts=restarts,
        merge_tol=merge_tol,
    )
    k = k_init or imported.k_init
    output = Path(output_path) if output_path else Path(input_path).with_suffix(".out")

    if not quiet:
        err_console.print(
            f"[bold cyan]Optimizing[/] J = {ensemble.num_ops}, N = {ensemble.dim}, "
            f"K = {k}, seed = {cfg.seed}"
        )

    def on_progress(restart: int, iteration: int, mi: float) -> None:
        if not quiet and iteration % PROGRESS_EVERY == 0:
            err_console.print(
                f"[dim]restart {restart + 1}, iteration {iteration}: MI = {mi:.12f}[/]"
            )

    try:
        report = run_optimizer(ensemble, cfg, k, on_progress=on_progress)
    except (InvalidEnsemble, RankDeficient) as exc:
        err_console.print(f"[red]{exc}[/]")
        raise SystemExit(EXIT_ERROR)

    output.write_text(write_output(report, ensemble, cfg), encoding="ascii", newline="\n")
    if json_out:
        save_json_report(report, ensemble, output.with_name(output.name + ".json"))

    if not quiet:
        print_report(report, ensemble, console)
        console.print(f"[green]Results saved to {output}[/]\n")

    if not report.converged:
        raise SystemExit(EXIT_MAX_ITER)


@cli.command()
def ensembles() -> None:
    """List built-in ensembles."""
    from rich.table import Table

    table = Table(title="Built-in Ensembles", border_style="cyan", show_lines=True)
    table.add_column("Name", style="bold cyan")
    table.add_column("J", justify="right")
    table.add_column("N", justify="right")
    table.add_column("K", justify="right")
    table.add_column("Accessible info (bits)", justify="right")
    table.add_column("Description")

    for name, named in ENSEMBLES.items():
        e = named.build()
        ai = "-" if named.accessible_information is None else f"{named.accessible_information:.6f}"
        k = named.k_init or e.dim**2
        table.add_row(name, str(e.num_ops), str(e.dim), str(k), ai, named.description)

    console.print()
    console.print(table)
    console.print()


@cli.command()
@click.argument("name", type=click.Choice(list(ENSEMBLES.keys())))
@click.option(
    "--output", "-o", default=None, help="Import file to write (prints to stdout if omitted)"
)
@click.option("--k-init", type=click.IntRange(min=1), default=None, help="K written to the header")
def generate(name: str, output: str | None, k_init: int | None) -> None:
    """Write an import file for a built-in ensemble.

    Example: povm-ascent generate trine -o trine.txt
    """
    named = get_ensemble(name)
    e = named.build()
    k = k_init or named.k_init or e.dim**2
    text = write_import(ImportFile(dim=e.dim, num_ops=e.num_ops, k_init=k, ops=e.ops))
    if output:
        Path(output).write_text(text, encoding="ascii", newline="\n")
        console.print(f"[green]Wrote {name} to {output}[/]")
    else:
        click.echo(text, nl=False)


@cli.command()
@click.argument("results_file", type=click.Path(exists=True))
def report(results_file: str) -> None:
    """Display a report from a saved JSON report file."""
    import json

    from .io import load_json_report

    try:
        saved, ensemble = load_json_report(results_file)
    except json.JSONDecodeError as exc:
        console.print(f"[red]Invalid JSON in {results_file}: {exc}[/]")
        raise SystemExit(EXIT_ERROR)
    except (KeyError, TypeError, ValueError) as exc:
        console.print(f"[red]Unrecognized report format in {results_file}: {exc}[/]")
        raise SystemExit(EXIT_ERROR)

    print_report(saved, ensemble, console)


@cli.command()
@click.option(
    "--input", "-i", "input_path", required=True,
    type=click.Path(dir_okay=False), help="Import file with the ensemble",
)
def holevo(input_path: str) -> None:
    """Print the Holevo bound, an upper limit on the accessible information."""
    _, ensemble = _load_ensemble(input_path)
    click.echo(f"{holevo_bound(ensemble):.12f}")


def main(argv: list[str] | None = None) -> int:
    """Run the CLI without exiting the interpreter; returns the exit status."""
    try:
        cli.main(
            args=argv,
            prog_name="povm-ascent",
            standalone_mode=False,
        )
    except SystemExit as exc:
        code = exc.code
        return code if isinstance(code, int) else EXIT_ERROR
    except click.UsageError as exc:
        # 2 is reserved for runs stopped at the iteration cap
        exc.show()
        return EXIT_ERROR
    except click.ClickException as exc:
        exc.show()
        return exc.exit_code
    except click.exceptions.Abort:
        return EXIT_ERROR
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
