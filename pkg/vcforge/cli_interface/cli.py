#!/usr/bin/env python
# -*- coding: utf-8 -*-
'''
                 ____
   _  _____     / __/__  _______ ____
  | |/ / __/   / _// _ \/ __/ _ `/ -_)
  |___/\__/   /_/  \___/_/  \_, /\__/
                           /___/

vcforge - Voice Conversion Toolkit
File: vcforge/cli_interface/cli.py
Created: 2026-09-11 08:40:13 UTC

Description:
    Console output for the vcforge subcommands.
    Renders stage summaries, training runs and evaluation reports with rich.
'''

# Rich Library Imports for formatted console outputs
from rich.console import Console
from rich.panel import Panel
from rich.table import Table
from rich.align import Align
# Rich Library Imports for Progress Indications
from rich.progress import Progress, SpinnerColumn, TextColumn, TimeElapsedColumn

import logging
from contextlib import contextmanager
from typing import Iterator

from vcforge import __version__
from vcforge.domain.domain import EvalReport
from vcforge.metrics import report_table
from vcforge.models import RunMetadata
from vcforge.pipeline import StageSummary
from vcforge.synthetic import SyntheticCorpus

logger = logging.getLogger(__name__)

class ConsoleReporter:
    """Formatted console feedback for one vcforge invocation.

    Attributes:
        console (Console): Rich console the reporter prints to.
    """
    console: Console

    def __init__(self, console: Console) -> None:
        self.console = console

    def display_header(self, command: str, workdir: str) -> None:
        header = (
            f"[bold cyan]vcforge[/bold cyan] {__version__} - [yellow]{command}[/yellow]\n"
            f"[dim]workdir: {workdir}[/dim]"
        )
        self.console.print(Panel(Align.center(header), border_style="blue", padding=(0, 2)))

    @contextmanager
    def working(self, description: str) -> Iterator[None]:
        """Spinner shown while a long stage runs."""
        with Progress(
            SpinnerColumn(),
            TextColumn("[progress.description]{task.description}"),
            TimeElapsedColumn(),
            console=self.console,
            transient=True,
        ) as progress:
            progress.add_task(description=description, total=None)
            yield

    def display_summary(self, summary: StageSummary) -> None:
        """Counts per outcome, plus the reason for every failed utterance."""
        style = "red" if summary.failed else "green"
        body = (
            f"[bold]Succeeded:[/bold] {len(summary.succeeded)}\n"
            f"[bold]Skipped (up to date):[/bold] {len(summary.skipped)}\n"
            f"[bold]Failed:[/bold] {len(summary.failed)}\n"
            f"[bold]Files written:[/bold] {summary.files_written}"
        )
        if summary.output is not None:
            body += f"\n[bold]Output:[/bold] {summary.output}"
        self.console.print(Panel(body, title=f"[bold blue]{summary.command}[/bold blue]",
                                 border_style=style, padding=(1, 2)))
        if summary.failed:
            table = Table(title="Failed utterances", title_style="bold red")
            table.add_column("Utterance", style="cyan")
            table.add_column("Error")
            for utt_id, error in summary.failed.items():
                table.add_row(utt_id, error)
            self.console.print(table)

    def display_run(self, metadata: RunMetadata) -> None:
        table = Table(title=f"Training run: {metadata.system}")
        table.add_column("Phase", style="cyan")
        table.add_column("Epochs", justify="right")
        table.add_column("Final MSE", justify="right")
        for phase in metadata.phases:
            table.add_row(phase.phase, str(phase.epochs), "-" if phase.final_mse is None else f"{phase.final_mse:.6f}")
        self.console.print(table)
        self.console.print(f"[dim]seed {metadata.seed}, {len(metadata.train_ids)} training utterances, "
                           f"config {metadata.config_hash[:12]}[/dim]")

    def display_report(self, report: EvalReport) -> None:
        self.console.print(report_table(report))
        if report.excluded:
            self.console.print(f"[yellow]Excluded (id mismatch): {', '.join(report.excluded)}[/yellow]")

    def display_corpus(self, corpus: SyntheticCorpus) -> None:
        body = (
            f"[bold]Manifest:[/bold] {corpus.manifest}\n"
            f"[bold]Config:[/bold] {corpus.config_file}\n"
            f"[bold]Train / test:[/bold] {len(corpus.train_ids)} / {len(corpus.test_ids)}"
        )
        self.console.print(Panel(body, title="[bold blue]Synthetic corpus[/bold blue]",
                                 border_style="green", padding=(1, 2)))

    def display_error(self, message: str) -> None:
        logger.debug(f"Reporting error to console: {message}")
        self.console.print(f"[bold red]Error:[/bold red] {message}")
