"""Run configuration: the single JSON document describing one reproducible command run."""
import hashlib
from pathlib import Path
from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from cuspkit.data_classes import EnumLiteral
from cuspkit.potential import PotentialModel
from cuspkit.separability import ParticleConfig
from cuspkit.serialization import load_model


class RunCommand(EnumLiteral):
    classify = "classify"
    cusp_eval = "cusp-eval"
    solve = "solve"
    rigidity_check = "rigidity-check"
    energy_series = "energy-series"
    separability = "separability"

    @property
    def needs_potential(self) -> bool:
        return self != RunCommand.separability

    @property
    def is_solve_type(self) -> bool:
        return self in (RunCommand.solve, RunCommand.rigidity_check, RunCommand.energy_series)


class GridParams(BaseModel):
    """Radial grid settings; r_min is chosen from the potential class."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    r_max: float = Field(default=10.0, gt=0.0, description="Outer radius in scaled units", examples=[10.0])
    n_log: int = Field(default=160, ge=8, description="Logarithmic points below the switch radius")
    n_lin: int = Field(default=640, ge=8, description="Uniform points above the switch radius")
    free_scale: float = Field(default=1.0, gt=0.0, description="Length unit sL used when the potential has no scale")


class SeparabilityParams(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    particles: ParticleConfig
    sweep: Optional[List[float]] = Field(default=None, description="Pair separations for the scaling fit")
    density: Optional[float] = Field(default=None, gt=0.0, description="Spectator density for the r_ρ Monte Carlo check")
    samples: int = Field(default=10_000, ge=1, description="Monte Carlo samples")


class RunConfig(BaseModel):
    """
    One run of the command-line tool. All physical inputs are in scaled units
    (ħ²/2μ = 1): strengths are 2μG/ħ², energies 2μE/ħ².
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    version: Literal[1] = Field(..., description="Config format version")
    command: RunCommand = Field(..., examples=["classify", "solve"])
    potential: Optional[PotentialModel] = Field(default=None, description="Inline potential model")
    potential_file: Optional[str] = Field(
        default=None, description="JSON/YAML model, YAML catalog or two-column CSV table, relative to the config",
        examples=["models.yaml", "table.csv"])
    potential_name: Optional[str] = Field(default=None, description="Model name inside a YAML catalog")
    l: int = Field(default=0, ge=0, description="Partial wave")
    energies: List[float] = Field(default_factory=list, description="Scaled energies ε")
    radii: List[float] = Field(default_factory=list, description="Radii for cusp evaluation and rigidity checks")
    grid: GridParams = Field(default_factory=GridParams)
    j_max: int = Field(default=4, ge=1, le=6, description="Highest energy-Taylor order")
    separability: Optional[SeparabilityParams] = None
    output: Optional[str] = Field(default=None, description="Output directory (overridden by --output)")
    seed: Optional[int] = Field(default=None, description="Random seed (overridden by --seed)")

    @model_validator(mode="after")
    def _command_fields(self) -> "RunConfig":
        command = RunCommand(self.command)
        if command.needs_potential and (self.potential is None) == (self.potential_file is None):
            raise ValueError(f"'{command}' needs exactly one of 'potential' and 'potential_file'")
        if self.potential_name is not None and self.potential_file is None:
            raise ValueError("'potential_name' selects a model out of 'potential_file'")
        if command in (RunCommand.solve, RunCommand.rigidity_check) and not self.energies:
            raise ValueError(f"'{command}' needs at least one energy")
        if command in (RunCommand.cusp_eval, RunCommand.rigidity_check) and not self.radii:
            raise ValueError(f"'{command}' needs at least one radius")
        if any(r <= 0.0 for r in self.radii):
            raise ValueError("radii must be positive")
        if command == RunCommand.separability and self.separability is None:
            raise ValueError("'separability' needs a 'separability' block")
        return self

    @classmethod
    def from_file(cls, path: Path) -> "RunConfig":
        return cls.model_validate_json(Path(path).read_text())

    def digest(self) -> str:
        """sha256 of the canonical JSON form; recorded in every CSV written by the run."""
        return hashlib.sha256(self.model_dump_json(exclude_none=True).encode("utf-8")).hexdigest()

    def resolve_model(self, base_dir: Path = Path(".")) -> PotentialModel:
        if self.potential is not None:
            return self.potential
        path = Path(self.potential_file)
        if not path.is_absolute():
            path = Path(base_dir) / path
        return load_model(path, name=self.potential_name)
