"""Loading and saving potential models: JSON/YAML documents, YAML catalogs and two-column CSV tables."""
import json
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field

from cuspkit.potential import PotentialModel, TabulatedPotential

DEFAULT_CATALOG_SECTION = "potentials"
YAML_SUFFIXES = (".yaml", ".yml")


class ModelYaml:
    """
    Static helpers for section-based YAML documents.

    Methods:
        read_section(file_path, section_name, parent_section) -> Any:
            Reads one section, optionally nested in a parent section.
        save_section(file_path, section_data, section_name, parent_section) -> None:
            Updates one section, keeping the rest of the document.
    """

    @staticmethod
    def read_document(file_path: Path) -> Dict[str, Any]:
        if not file_path.exists():
            raise FileNotFoundError(f"File '{file_path}' not found.")
        with file_path.open("r") as f:
            data = yaml.safe_load(f) or {}
        if not isinstance(data, dict):
            raise ValueError(f"'{file_path}' does not hold a YAML mapping")
        return data

    @staticmethod
    def read_section(file_path: Path, section_name: str, parent_section: Optional[str] = None) -> Any:
        """
        Reads data from a given section within a YAML file.

        Raises:
            FileNotFoundError: If the file does not exist.
            KeyError: If the section or parent section is missing.
        """
        data = ModelYaml.read_document(file_path)
        try:
            if parent_section:
                return data[parent_section][section_name]
            return data[section_name]
        except KeyError as e:
            raise KeyError(
                f"Section '{section_name}' under parent section '{parent_section}' not found in '{file_path}'"
            ) from e

    @staticmethod
    def save_section(file_path: Path, section_data: Any, section_name: str,
                     parent_section: Optional[str] = None) -> None:
        data: Dict[str, Any] = {}
        if file_path.exists():
            data.update(ModelYaml.read_document(file_path))
        else:
            file_path.parent.mkdir(parents=True, exist_ok=True)
        if parent_section:
            data.setdefault(parent_section, {})[section_name] = section_data
        else:
            data[section_name] = section_data
        with file_path.open("w") as f:
            yaml.safe_dump(data, f, sort_keys=False)


def model_to_data(model: PotentialModel) -> Dict[str, Any]:
    """Plain mapping of a model, without unset optional parts."""
    return model.model_dump(mode="json", exclude_none=True)


class ModelCatalog(BaseModel):
    """Named potential models kept under one section of a YAML document."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    models: Dict[str, PotentialModel] = Field(default_factory=dict, description="Models by catalog name")

    @property
    def names(self) -> List[str]:
        return list(self.models)

    def get(self, name: str) -> PotentialModel:
        try:
            model = self.models[name]
        except KeyError as e:
            raise KeyError(f"model '{name}' is not in the catalog (known: {', '.join(self.models)})") from e
        return model if model.name is not None else model.model_copy(update={"name": name})

    def with_model(self, name: str, model: PotentialModel) -> "ModelCatalog":
        return ModelCatalog(models={**self.models, name: model})

    @classmethod
    def from_yaml(cls, file_path: Path, parent_section: str = DEFAULT_CATALOG_SECTION) -> "ModelCatalog":
        data = ModelYaml.read_document(Path(file_path))
        section = data.get(parent_section) or {}
        return cls.model_validate({"models": section})

    def save_to_yaml(self, file_path: Path, parent_section: str = DEFAULT_CATALOG_SECTION) -> None:
        for name, model in self.models.items():
            ModelYaml.save_section(Path(file_path), model_to_data(model), name, parent_section)


def read_table_csv(file_path: Path) -> TabulatedPotential:
    """Two comma-separated columns r, v; lines starting with '#' and a non-numeric header are skipped."""
    file_path = Path(file_path)
    if not file_path.exists():
        raise FileNotFoundError(f"File '{file_path}' not found.")
    with file_path.open("r") as f:
        first = next((line for line in f if line.strip() and not line.startswith("#")), "")
    skip = 0 if _is_numeric_row(first) else 1
    table = np.loadtxt(file_path, delimiter=",", comments="#", skiprows=skip, ndmin=2)
    if table.shape[1] != 2:
        raise ValueError(f"'{file_path}' must have exactly two columns (r, v), found {table.shape[1]}")
    return TabulatedPotential(r=table[:, 0].tolist(), v=table[:, 1].tolist())


def _is_numeric_row(line: str) -> bool:
    try:
        [float(cell) for cell in line.split(",")]
    except ValueError:
        return False
    return True


def load_model(file_path: Path, name: Optional[str] = None) -> PotentialModel:
    """Load a model from JSON, YAML (a model document, or ``name`` out of a catalog) or a CSV table."""
    file_path = Path(file_path)
    suffix = file_path.suffix.lower()
    if suffix == ".csv":
        return PotentialModel(name=name or file_path.stem, tabulated=read_table_csv(file_path))
    if suffix in YAML_SUFFIXES:
        if name is not None:
            return ModelCatalog.from_yaml(file_path).get(name)
        return PotentialModel.model_validate(ModelYaml.read_document(file_path))
    if suffix == ".json":
        if not file_path.exists():
            raise FileNotFoundError(f"File '{file_path}' not found.")
        return PotentialModel.model_validate_json(file_path.read_text())
    raise ValueError(f"unsupported model file type '{suffix}' (expected .json, .yaml, .yml or .csv)")


def save_model(model: PotentialModel, file_path: Path) -> None:
    """Write a model as JSON or YAML according to the file suffix."""
    file_path = Path(file_path)
    file_path.parent.mkdir(parents=True, exist_ok=True)
    data = model_to_data(model)
    if file_path.suffix.lower() in YAML_SUFFIXES:
        with file_path.open("w") as f:
            yaml.safe_dump(data, f, sort_keys=False)
    else:
        file_path.write_text(json.dumps(data, indent=2))
