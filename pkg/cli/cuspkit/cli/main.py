import json
from pathlib import Path
from typing import Optional

import typer
from dotenv import load_dotenv
from pydantic import ValidationError
from rich.console import Console

from cuspkit.cli.config import CuspkitEnvConfig
from cuspkit.cli.logging import EliotLogger
from cuspkit.cli.run_config import RunConfig
from cuspkit.cli.runner import EXIT_INVALID, EXIT_OK, run

load_dotenv(override=True)
env_config = CuspkitEnvConfig()
app = typer.Typer(
    help="Cusp functions, wave-function rigidity and pair separability. "
         "All inputs are in scaled units (ħ²/2μ = 1): strengths 2μG/ħ², energies 2μE/ħ²."
)
err_console = Console(stderr=True)


def load_config(path: Path) -> RunConfig:
    """
    Parse and validate a run config file.

    Raises:
        FileNotFoundError: If the file does not exist.
        ValidationError: If the JSON is malformed, has unknown keys or misses command fields.
    """
    if not path.exists():
        raise FileNotFoundError(f"Config file not found at {path}.")
    return RunConfig.from_file(path)


@app.command("run")
def run_command(
    config: Path = typer.Option(..., "--config", help="JSON run config (\"version\": 1)"),
    output: Path = typer.Option(Path(env_config.output_dir), "--output", help="Directory receiving CSV results"),
    threads: int = typer.Option(env_config.threads, "--threads", min=1, help="Worker threads for sweeps"),
    seed: Optional[int] = typer.Option(env_config.seed, "--seed", help="Random seed for Monte Carlo estimates"),
) -> None:
    """Run the command named in the config and write its CSV output."""
    EliotLogger(Path(env_config.log_dir), Path(env_config.tmp_dir), env_config.log_output)
    try:
        run_config = load_config(config)
    except (FileNotFoundError, ValidationError, json.JSONDecodeError) as e:
        err_console.print(f"[bold red]{type(e).__name__}[/bold red]: {e}")
        raise typer.Exit(code=EXIT_INVALID)
    outcome = run(run_config, output_dir=output, threads=threads, seed=seed, base_dir=config.parent)
    if outcome.exit_code != EXIT_OK:
        err_console.print(f"[bold red]{outcome.error}[/bold red]: {outcome.message}")
        raise typer.Exit(code=outcome.exit_code)
    typer.echo(outcome.summary)


@app.command("validate")
def validate_command(
    config: Path = typer.Option(..., "--config", help="JSON run config to check"),
) -> None:
    """Validate a run config without running it; prints its sha256."""
    try:
        run_config = load_config(config)
    except (FileNotFoundError, ValidationError, json.JSONDecodeError) as e:
        err_console.print(f"[bold red]{type(e).__name__}[/bold red]: {e}")
        raise typer.Exit(code=EXIT_INVALID)
    typer.echo(f"{run_config.command} config_sha256={run_config.digest()}")


if __name__ == "__main__":
    app()
