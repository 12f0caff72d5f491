"""CSV tables, run manifests and plot scripts written by the sweep runner."""

import csv
import hashlib
import json
import logging
import math
import platform
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy
from jinja2 import Environment, FileSystemLoader, StrictUndefined

from config import FLOAT_FORMAT, HASH_LENGTH

logger = logging.getLogger(__name__)

TEMPLATES_DIR = Path(__file__).resolve().parent.parent / "templates"


@dataclass(frozen=True)
class PlotHint:
    x: str
    ys: tuple[str, ...]
    group: str | None = None
    logx: bool = False


@dataclass
class Table:
    """Rows in canonical grid order; ``units`` names the unit of each column."""

    name: str
    columns: list[str]
    units: dict[str, str] = field(default_factory=dict)
    rows: list[list] = field(default_factory=list)
    plot: PlotHint | None = None

    def append(self, **values) -> None:
        self.rows.append([values.get(col, math.nan) for col in self.columns])

    @property
    def error_count(self) -> int:
        if "error" not in self.columns:
            return 0
        idx = self.columns.index("error")
        return sum(1 for row in self.rows if row[idx])

    def column(self, name: str) -> list:
        idx = self.columns.index(name)
        return [row[idx] for row in self.rows]


def config_hash(config: dict) -> str:
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canonical.encode()).hexdigest()[:HASH_LENGTH]


def format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        return FLOAT_FORMAT % value
    return str(value)


def table_filename(experiment: str, table: Table) -> str:
    return f"{experiment}.csv" if table.name == "main" else f"{experiment}.{table.name}.csv"


def write_table(path: Path, experiment: str, table: Table, digest: str) -> Path:
    units = ",".join(f"{col}:{table.units[col]}" for col in table.columns if col in table.units)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        f.write(f"# experiment={experiment} table={table.name} config_hash={digest} units={units}\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(table.columns)
        for row in table.rows:
            writer.writerow([format_value(v) for v in row])
    logger.info("wrote %s (%d rows, %d errors)", path, len(table.rows), table.error_count)
    return path


def read_table(path: Path) -> tuple[dict, list[str], list[list[str]]]:
    """Header metadata, column names and raw string rows of a table written above."""
    with open(path, newline="") as f:
        first = f.readline().lstrip("#").strip()
        meta = dict(item.split("=", 1) for item in first.split() if "=" in item)
        reader = csv.reader(f)
        columns = next(reader)
        rows = list(reader)
    return meta, columns, rows


def versions() -> dict:
    return {"python": platform.python_version(), "numpy": np.__version__, "scipy": scipy.__version__}


def write_manifest(path: Path, experiment: str, config: dict, digest: str, wall_time: float,
                   tables: list[Table], artifacts: list[Path]) -> Path:
    manifest = {
        "experiment": experiment,
        "config_hash": digest,
        "config": config,
        "versions": versions(),
        "wall_time_s": round(wall_time, 3),
        "rows": {t.name: len(t.rows) for t in tables},
        "errors": {t.name: t.error_count for t in tables},
        "artifacts": [p.name for p in artifacts],
    }
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")
    return path


def render_plot_script(path: Path, experiment: str, csv_name: str, table: Table) -> Path:
    env = Environment(loader=FileSystemLoader(TEMPLATES_DIR), undefined=StrictUndefined,
                      keep_trailing_newline=True)
    script = env.get_template("plot_script.py.j2").render(
        experiment=experiment,
        csv_name=csv_name,
        hint=table.plot,
        units=table.units,
    )
    path.write_text(script)
    return path
