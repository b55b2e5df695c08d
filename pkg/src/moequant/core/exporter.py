import csv
import io
import json
import math
from collections.abc import Mapping
from logging import getLogger
from typing import Any

from moequant.models.reports import ExperimentOutput, ResultTable, Scalar

logger = getLogger(__name__)


def format_float(value: float) -> str:
    """Formats a float with 17 significant digits in scientific notation."""
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.16e}"


def format_scalar(value: Scalar) -> str:
    """Formats a table cell: floats in full precision, integers and strings verbatim, None as empty."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return format_float(value)
    return str(value)


def format_metadata(metadata: Mapping[str, Scalar]) -> str:
    """Renders the commented metadata block that heads every CSV file."""
    return "".join(f"# {key}: {format_scalar(metadata[key])}\n" for key in sorted(metadata))


def to_csv(table: ResultTable, metadata: Mapping[str, Scalar]) -> str:
    """Generate a CSV document for one table, headed by the metadata block."""
    logger.info(f"Generating CSV for table '{table.name}' ({len(table.rows)} rows)...")
    buffer = io.StringIO()
    buffer.write(format_metadata(metadata))
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(table.columns)
    writer.writerows([format_scalar(v) for v in row] for row in table.rows)
    return buffer.getvalue()


def _jsonable(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return format_float(value)
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, list | tuple):
        return [_jsonable(v) for v in value]
    return value


def to_json(output: ExperimentOutput) -> str:
    """Generate a JSON document with metadata, summary and every table as a list of records."""
    logger.info(f"Generating JSON for '{output.command}'...")
    document = {
        "command": output.command,
        "metadata": dict(output.metadata),
        "summary": dict(output.summary),
        "tables": {table.name: table.to_records() for table in output.tables},
    }
    return json.dumps(_jsonable(document), indent=2, sort_keys=True, ensure_ascii=False) + "\n"
