import os
from typing import Literal, Optional

from pydantic import BaseModel, Field

LogDestinations = Literal["stdout", "file", "both", "none"]


def _optional_int(name: str) -> Optional[int]:
    value = os.getenv(name)
    return int(value) if value not in (None, "") else None


class CuspkitEnvConfig(BaseModel):
    """
    Settings for command-line runs loaded from environment variables.

    CLI flags default to these values; call ``load_dotenv`` before constructing
    the config to pick up a ``.env`` file.
    """
    threads: int = Field(
        default_factory=lambda: int(os.getenv("CUSPKIT_THREADS", "1")),
        description="Worker threads for energy and radius sweeps",
        ge=1,
        examples=[1, 4]
    )
    output_dir: str = Field(
        default_factory=lambda: os.getenv("CUSPKIT_OUTPUT_DIR", "results"),
        description="Directory receiving CSV results",
        examples=["results", "/data/cuspkit"]
    )
    log_dir: str = Field(
        default_factory=lambda: os.getenv("CUSPKIT_LOG_DIR", "logs"),
        description="Path to log directory",
        examples=["logs", "/app/logs"]
    )
    tmp_dir: str = Field(
        default_factory=lambda: os.getenv("CUSPKIT_TMP_DIR", "tmp"),
        description="Path to temporary directory",
        examples=["tmp", "/temp"]
    )
    log_output: LogDestinations = Field(
        default_factory=lambda: os.getenv("CUSPKIT_LOG_OUTPUT", "none"),
        description="Where eliot action logs go",
        examples=["none", "stdout", "file", "both"]
    )
    seed: Optional[int] = Field(
        default_factory=lambda: _optional_int("CUSPKIT_SEED"),
        description="Default random seed for Monte Carlo estimates",
        examples=[None, 12345]
    )
