"""Rich terminal reporter for optimization runs."""

from __future__ import annotations

import numpy as np
from rich.console import Console
from rich.panel import Panel
from rich.table import Table
from rich.text import Text

from .info import holevo_bound, mutual_information
from .model import Ensemble, probability_table
from .optimizer import RunReport

RANK_TOL = 1e-9


def _status_color(converged: bool) -> str:
    return "green" if converged else "yellow"


def _gap_color(gap: float) -> str:
    """Color for the distance between the result and the Holevo bound."""
    if gap <= 1e-6:
        return "green"
    if gap <= 0.1:
        return "yellow"
    return "red"


def print_report(report: RunReport, e: Ensemble, console: Console | None = None) -> None:
    """Print a terminal summary of a run."""
    console = console or Console()
    cfg = report.config_echo
    chi = holevo_bound(e)
    ai = report.accessible_information
    status = "converged" if report.converged else "stopped at iteration cap"

    console.print()
    console.print(
        Panel(
            f"[bold cyan]povm-ascent[/] J = {e.num_ops}, N = {e.dim}, K = {report.k_init}\n"
            f"Accessible information: [bold white]{ai:.9f}[/] bits "
            f"(Holevo bound {chi:.9f})\n"
            f"Iterations: {report.iterations} | "
            f"[{_status_color(report.converged)}]{status}[/]",
            title="[bold]Accessible Information[/]",
            border_style="cyan",
        )
    )

    params = Table(title="Run Parameters", border_style="blue", show_lines=True)
    params.add_column("Parameter", style="bold")
    params.add_column("Value", justify="right")
    params.add_row("Steepest-ascent probability", f"{cfg.steepest_prob}")
    params.add_row("Tolerance", f"{cfg.tolerance:g}")
    params.add_row("Seed", f"{cfg.seed}")
    params.add_row("Restarts", f"{cfg.restarts}")
    params.add_row("Plain-gradient iterations", f"{report.steepest_steps}")
    params.add_row("Initial MI", f"{report.initial_mi:.9f}")
    params.add_row(
        "Gap to Holevo bound",
        Text(f"{chi - ai:.3e}", style=_gap_color(chi - ai)),
    )
    console.print(params)

    table = probability_table(e, report.reduced_povm)
    outcomes = Table(
        title=f"Reduced POVM ({report.reduced_povm.num_outcomes} of "
        f"{report.final_povm.num_outcomes} outcomes)",
        border_style="magenta",
    )
    outcomes.add_column("k", justify="right", style="dim")
    outcomes.add_column("tr Pi_k", justify="right")
    outcomes.add_column("p(k)", justify="right")
    outcomes.add_column("Rank", justify="right")
    for k, pi in enumerate(report.reduced_povm.elements):
        eigenvalues = np.linalg.eigvalsh(pi)
        rank = int(np.sum(eigenvalues > RANK_TOL * max(eigenvalues[-1], 1.0)))
        outcomes.add_row(
            str(k + 1),
            f"{np.real(np.trace(pi)):.6f}",
            f"{table.col_marginals[k]:.6f}",
            str(rank),
        )
    console.print(outcomes)
    console.print(
        f"[dim]MI of reduced POVM: {mutual_information(table):.12f} bits[/]"
    )

    if len(report.restart_mis) > 1:
        print_restarts(report, console)
    console.print()


def print_restarts(report: RunReport, console: Console | None = None) -> None:
    """Table of final MI per restart with the reported one highlighted."""
    console = console or Console()
    restarts = Table(title="Restarts", border_style="green", show_lines=True)
    restarts.add_column("#", justify="right", style="dim")
    restarts.add_column("Seed", justify="right")
    restarts.add_column("Final MI (bits)", justify="right")
    for i, mi in enumerate(report.restart_mis):
        style = "bold green" if i == report.best_restart else "dim"
        restarts.add_row(
            str(i + 1),
            str(report.config_echo.seed + i),
            Text(f"{mi:.12f}", style=style),
        )
    console.print(restarts)
    console.print(f"\n[bold green]Best: restart {report.best_restart + 1}[/]")
