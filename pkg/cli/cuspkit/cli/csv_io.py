"""
CSV results: a ``# config_sha256=<hash>`` comment line, a header naming the
columns, then one row per record. Floats carry 17 significant digits so that
reading back reproduces the written values exactly; infinities are ``inf``/``-inf``.
"""
import csv
import math
from pathlib import Path
from typing import Any, Dict, List, Mapping, Sequence, Tuple

HASH_PREFIX = "# config_sha256="


def format_cell(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{value:.17g}"
    return "" if value is None else str(value)


def parse_cell(text: str) -> Any:
    if text == "":
        return None
    if text in ("true", "false"):
        return text == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def write_csv(path: Path, columns: Sequence[str], rows: Sequence[Mapping[str, Any]], config_hash: str) -> Path:
    """Write rows (missing keys become empty cells) with LF line endings."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as f:
        f.write(f"{HASH_PREFIX}{config_hash}\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_cell(row.get(column)) for column in columns])
    return path


def read_csv(path: Path) -> Tuple[str, List[str], List[Dict[str, Any]]]:
    """Returns (config hash, columns, rows)."""
    with Path(path).open("r", newline="") as f:
        first = f.readline().rstrip("\n")
        if not first.startswith(HASH_PREFIX):
            raise ValueError(f"'{path}' does not start with a config hash line")
        reader = csv.reader(f)
        columns = next(reader)
        rows = [{column: parse_cell(cell) for column, cell in zip(columns, record)} for record in reader]
    return first[len(HASH_PREFIX):], columns, rows
