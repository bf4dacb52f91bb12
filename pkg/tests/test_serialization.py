import json

import pytest
import yaml
from pydantic import ValidationError

from cuspkit.potential import PotentialModel, PowerTerm, YukawaTerm, classify
from cuspkit.data_classes import ShortRangeTag
from cuspkit.serialization import (
    ModelCatalog,
    ModelYaml,
    load_model,
    model_to_data,
    read_table_csv,
    save_model,
)


@pytest.fixture
def screened() -> PotentialModel:
    return PotentialModel(name="screened", terms=[PowerTerm(strength=-2.0, exponent=1.0)],
                          yukawa=YukawaTerm(strength=0.5, range=3.0))


def test_model_to_data_drops_unset_parts():
    data = model_to_data(PotentialModel.power(1.0, 6.0))
    assert data == {"terms": [{"strength": 1.0, "exponent": 6.0}]}


def test_catalog_save_and_load(tmp_path, screened):
    config_path = tmp_path / "models.yaml"
    catalog = ModelCatalog().with_model("screened", screened).with_model("vdw", PotentialModel.power(1.0, 6.0))
    catalog.save_to_yaml(config_path)

    loaded = ModelCatalog.from_yaml(config_path)
    assert loaded.names == ["screened", "vdw"]
    assert loaded.get("screened") == screened
    # unnamed entries take their catalog key
    assert loaded.get("vdw").name == "vdw"
    with pytest.raises(KeyError):
        loaded.get("missing")


def test_catalog_keeps_other_sections(tmp_path, screened):
    config_path = tmp_path / "models.yaml"
    config_path.write_text(yaml.safe_dump({"notes": {"author": "lab"}}))
    ModelCatalog(models={"screened": screened}).save_to_yaml(config_path)
    assert ModelYaml.read_section(config_path, "notes") == {"author": "lab"}
    assert ModelYaml.read_section(config_path, "screened", "potentials")["name"] == "screened"
    with pytest.raises(KeyError):
        ModelYaml.read_section(config_path, "absent", "potentials")


def test_load_model_by_suffix(tmp_path, screened):
    json_path = tmp_path / "model.json"
    yaml_path = tmp_path / "model.yaml"
    save_model(screened, json_path)
    save_model(screened, yaml_path)
    assert json.loads(json_path.read_text())["yukawa"] == {"strength": 0.5, "range": 3.0}
    assert load_model(json_path) == screened
    assert load_model(yaml_path) == screened

    catalog_path = tmp_path / "catalog.yml"
    ModelCatalog(models={"a": screened}).save_to_yaml(catalog_path)
    assert load_model(catalog_path, name="a") == screened

    with pytest.raises(ValueError):
        load_model(tmp_path / "model.txt")
    with pytest.raises(FileNotFoundError):
        load_model(tmp_path / "absent.json")


def test_load_rejects_unknown_keys(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"terms": [], "charge": 1}))
    with pytest.raises(ValidationError):
        load_model(path)


def test_csv_table(tmp_path):
    path = tmp_path / "coulomb.csv"
    rows = ["r,v"] + [f"{r},{-2.0 / r}" for r in (0.05 * k for k in range(1, 101))]
    path.write_text("\n".join(rows) + "\n")
    model = load_model(path)
    assert model.name == "coulomb"
    assert len(model.tabulated.r) == 100
    assert classify(model).tag == ShortRangeTag.gc

    headerless = tmp_path / "plain.csv"
    headerless.write_text("# r, v\n0.1,1.0\n0.2,0.5\n0.3,0.25\n0.4,0.125\n")
    assert read_table_csv(headerless).v == [1.0, 0.5, 0.25, 0.125]

    wide = tmp_path / "wide.csv"
    wide.write_text("0.1,1.0,2.0\n0.2,0.5,1.0\n")
    with pytest.raises(ValueError):
        read_table_csv(wide)
