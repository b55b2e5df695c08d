import json

import typer

from moequant.models.config import ExperimentConfig


def schema() -> None:
    """Print the JSON schema of the experiment config file."""
    typer.echo(json.dumps(ExperimentConfig.model_json_schema(), indent=2))
