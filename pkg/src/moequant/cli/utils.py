from collections.abc import Callable
from pathlib import Path
from typing import Annotated, Any

import typer
from pydantic import ValidationError

from moequant.api import load_config, render, sibling_path
from moequant.core.errors import ConfigError, NumericalError
from moequant.models.config import ExperimentConfig
from moequant.models.enums import ConstantsMode, SegmentationKind
from moequant.models.formats import OutputFormat
from moequant.models.reports import ExperimentOutput

CONFIG_ERROR_EXIT = 2
NUMERICAL_ERROR_EXIT = 3

ConfigOption = Annotated[
    Path | None,
    typer.Option(
        "--config",
        "-c",
        exists=True,
        file_okay=True,
        dir_okay=False,
        readable=True,
        help="Path to a JSON experiment config. Flags override its keys.",
    ),
]
SeedOption = Annotated[int | None, typer.Option("--seed", "-s", min=0, help="Root seed of every random stream.")]
OutOption = Annotated[
    Path | None,
    typer.Option("--out", "-o", help="File to write. Extra CSV tables go next to it. Prints to stdout if omitted."),
]
FormatOption = Annotated[
    OutputFormat | None,
    typer.Option("--format", "-f", case_sensitive=False, help="Output format. Inferred from --out if not specified."),
]
ThreadsOption = Annotated[
    int | None,
    typer.Option("--threads", "-t", min=1, envvar="MOEQUANT_THREADS", help="Worker threads for repeated trainings."),
]
TargetOption = Annotated[str | None, typer.Option("--target", help="Registered target function name.")]
DistributionOption = Annotated[str | None, typer.Option("--distribution", help="Registered input distribution name.")]
SegmentationOption = Annotated[
    SegmentationKind | None,
    typer.Option("--segmentation", case_sensitive=False, help="Segmentation design: optimal or uniform."),
]
ConstantsModeOption = Annotated[
    ConstantsMode | None,
    typer.Option("--constants-mode", case_sensitive=False, help="How expert constants are computed."),
]
ExpertsOption = Annotated[int | None, typer.Option("--m", "-m", min=1, help="Number of experts.")]
ExpertGridOption = Annotated[
    str | None, typer.Option("--m-values", help="Expert counts as 'a:b[:step]' (inclusive) or 'a,b,c'.")
]


def determine_output_format(
    output_format_option: OutputFormat | None,
    output_path_option: Path | None,
    default: OutputFormat = OutputFormat.CSV,
) -> OutputFormat:
    """Unified logic to determine output format from the flag, the output filename, or the default."""
    if output_format_option:
        return output_format_option

    if output_path_option:
        suffix = output_path_option.suffix.lstrip(".").lower()
        if suffix:
            try:
                return OutputFormat(suffix)
            except ValueError:
                typer.secho(f"Unknown extension '.{suffix}'. Writing {default.upper()}.", fg=typer.colors.YELLOW)
    return default


def write_content_to_file(path: Path, content: str) -> None:
    """Helper to ensure parent dirs exist and write content."""
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(content, encoding="utf-8")
        typer.secho(f"Successfully saved to: {path}", fg=typer.colors.GREEN)
    except OSError as e:
        typer.secho(f"Error writing file {path}: {e}", fg=typer.colors.RED)
        raise typer.Exit(code=1) from e


def fail(message: str, code: int) -> typer.Exit:
    """Prints a red error line and returns the exit to raise."""
    typer.secho(f"Error: {message}", fg=typer.colors.RED, err=True)
    return typer.Exit(code=code)


def run_command(
    runner: Callable[[ExperimentConfig], ExperimentOutput],
    config_path: Path | None,
    out: Path | None,
    output_format: OutputFormat | None,
    **overrides: Any,
) -> None:
    """Loads the config, runs one experiment and writes or prints its rendered output.

    Config errors exit with code 2 and numerical failures with code 3.
    """
    try:
        config = load_config(config_path, **overrides)
        output = runner(config)
    except (ConfigError, ValidationError) as e:
        raise fail(str(e), CONFIG_ERROR_EXIT) from e
    except NumericalError as e:
        raise fail(str(e), NUMERICAL_ERROR_EXIT) from e

    out = out or config.out
    fmt = determine_output_format(output_format or config.format, out)
    files = render(output, fmt)
    if out is None:
        for content in files.values():
            typer.echo(content, nl=False)
        return
    if fmt == OutputFormat.JSON and out.suffix == "":
        out = out.with_suffix(".json")
    for table, content in files.items():
        write_content_to_file(sibling_path(out, table), content)
