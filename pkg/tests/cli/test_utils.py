from pathlib import Path

import pytest
from _pytest.capture import CaptureFixture
from typer import Exit

from moequant.api import run_density
from moequant.cli.utils import (
    CONFIG_ERROR_EXIT,
    determine_output_format,
    fail,
    run_command,
    write_content_to_file,
)
from moequant.models.formats import OutputFormat


@pytest.mark.parametrize(
    ("fmt", "path", "expected"),
    [
        (OutputFormat.JSON, Path("out.csv"), OutputFormat.JSON),
        (None, Path("out.json"), OutputFormat.JSON),
        (None, Path("OUT.CSV"), OutputFormat.CSV),
        (None, Path("out"), OutputFormat.CSV),
        (None, None, OutputFormat.CSV),
    ],
)
def test_determine_output_format(fmt: OutputFormat | None, path: Path | None, expected: OutputFormat) -> None:
    """Test that the flag wins over the extension, which wins over the default."""
    assert determine_output_format(fmt, path) == expected


def test_determine_output_format_unknown_extension(capsys: CaptureFixture[str]) -> None:
    """Test that an unknown extension falls back to the default with a warning."""
    assert determine_output_format(None, Path("out.txt")) == OutputFormat.CSV
    assert "Unknown extension '.txt'" in capsys.readouterr().out


def test_write_content_to_file_creates_parents(tmp_path: Path, capsys: CaptureFixture[str]) -> None:
    """Test that missing parent directories are created."""
    path = tmp_path / "nested" / "dir" / "results.csv"
    write_content_to_file(path, "m\n1\n")
    assert path.read_text(encoding="utf-8") == "m\n1\n"
    assert "Successfully saved to" in capsys.readouterr().out


def test_write_content_to_file_failure(tmp_path: Path) -> None:
    """Test that an unwritable target exits with code 1."""
    target = tmp_path / "occupied"
    target.mkdir()
    with pytest.raises(Exit) as exc_info:
        write_content_to_file(target, "content")
    assert exc_info.value.exit_code == 1


def test_fail_returns_exit(capsys: CaptureFixture[str]) -> None:
    """Test that fail prints to stderr and carries the exit code."""
    exit_ = fail("broken", 3)
    assert exit_.exit_code == 3
    assert "Error: broken" in capsys.readouterr().err


def test_run_command_writes_sibling_tables(tmp_path: Path) -> None:
    """Test that CSV output writes one file per table next to the requested path."""
    out = tmp_path / "density.csv"
    run_command(run_density, None, out, None, m=3, export_points=5, grid_size=1001)
    assert out.exists()
    assert (tmp_path / "density.segmentation.csv").exists()


def test_run_command_appends_json_suffix(tmp_path: Path) -> None:
    """Test that JSON output without a suffix gets one."""
    run_command(run_density, None, tmp_path / "density", OutputFormat.JSON, m=3, export_points=5, grid_size=1001)
    assert (tmp_path / "density.json").exists()


def test_run_command_maps_config_errors(capsys: CaptureFixture[str]) -> None:
    """Test that invalid overrides exit with the configuration error code."""
    with pytest.raises(Exit) as exc_info:
        run_command(run_density, None, None, None, m=0)
    assert exc_info.value.exit_code == CONFIG_ERROR_EXIT
    assert "Invalid configuration" in capsys.readouterr().err
