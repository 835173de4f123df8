"""Plot-ready tables and their CSV / JSON serialization."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import __version__
from .model import ModelParams


def format_float(x) -> str:
    """12 significant digits; ``%g`` already switches to scientific below 1e-4."""
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        return format(x, ".12g")
    return str(x)


def _json_value(x):
    if isinstance(x, float):
        if not math.isfinite(x):
            return None
        return float(format(x, ".12g"))
    return x


@dataclass
class Table:
    name: str
    columns: list[str]
    rows: list[dict] = field(default_factory=list)
    meta: dict = field(default_factory=dict)
    x_column: str | None = None
    y_column: str | None = None

    def add(self, **row) -> None:
        unknown = set(row) - set(self.columns)
        if unknown:
            raise KeyError(f"columns {sorted(unknown)} are not in table '{self.name}'")
        self.rows.append(row)

    def column(self, name: str) -> list:
        return [r.get(name) for r in self.rows]

    def __len__(self):
        return len(self.rows)


def params_meta(params: ModelParams) -> dict:
    d = asdict(params)
    regime = params.regime
    d["regime"] = regime.name
    d["rho"] = regime.rho
    return d


def read_overlay(path) -> list[tuple[str, float, float]]:
    """Reference series with columns ``label, x, y`` (header row required)."""
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(row for row in fh if not row.lstrip().startswith("#"))
        missing = {"label", "x", "y"} - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"overlay file {path} lacks columns {sorted(missing)}")
        for row in reader:
            out.append((row["label"], float(row["x"]), float(row["y"])))
    return out


def merge_overlay(table: Table, series: list[tuple[str, float, float]]) -> Table:
    """Append reference points as extra rows tagged by a ``series`` column."""
    if table.x_column is None or table.y_column is None:
        raise ValueError(f"table '{table.name}' has no x/y columns to overlay onto")
    columns = table.columns if "series" in table.columns else ["series"] + table.columns
    merged = Table(table.name, columns, meta=dict(table.meta), x_column=table.x_column,
                   y_column=table.y_column)
    for row in table.rows:
        merged.rows.append({"series": "model", **row})
    for label, x, y in series:
        merged.rows.append({"series": label, table.x_column: x, table.y_column: y})
    return merged


def to_csv(table: Table) -> str:
    buf = io.StringIO()
    buf.write(f"# experiment: {table.name}\n")
    buf.write(f"# version: {__version__}\n")
    for key, value in table.meta.items():
        if isinstance(value, dict):
            inner = ", ".join(f"{k}={format_float(v)}" for k, v in value.items())
            buf.write(f"# {key}: {inner}\n")
        else:
            buf.write(f"# {key}: {format_float(value)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([format_float(row.get(c)) for c in table.columns])
    return buf.getvalue()


def to_json(table: Table) -> str:
    meta = {"experiment": table.name, "version": __version__}
    for key, value in table.meta.items():
        meta[key] = {k: _json_value(v) for k, v in value.items()} if isinstance(value, dict) \
            else _json_value(value)
    rows = [json.dumps([_json_value(row.get(c)) for c in table.columns], allow_nan=False)
            for row in table.rows]
    # one row per line keeps large sweeps diffable
    return (
        "{\n"
        f' "meta": {json.dumps(meta, allow_nan=False)},\n'
        f' "columns": {json.dumps(table.columns)},\n'
        ' "rows": [\n  ' + ",\n  ".join(rows) + "\n ]\n}\n"
    )


def write(table: Table, fmt: str, path: Path | None = None) -> str:
    text = to_json(table) if fmt == "json" else to_csv(table)
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text
