"""
Collect the experiment CSVs of an output directory into one Excel workbook.
Usage: python app.py report results/
Output: results/report_YYYY-MM-DD_HHMMSS.xlsx
"""

import logging
import math
from datetime import datetime
from pathlib import Path
from typing import NamedTuple

from openpyxl import Workbook
from openpyxl.styles import Alignment, Border, Font, PatternFill, Side
from openpyxl.utils import get_column_letter

from services.artifacts import read_table

logger = logging.getLogger(__name__)

# --- thresholds ---
REL_DEV_GOOD = 0.03
REL_DEV_WARN = 0.05
MAX_SHEET_TITLE = 31

# --- styles ---
HEADER_FILL = PatternFill("solid", fgColor="2B3E50")
HEADER_FONT = Font(bold=True, color="FFFFFF", size=11)
HEADER_ALIGNMENT = Alignment(horizontal="center", vertical="center", wrap_text=True)

GREEN_FILL = PatternFill("solid", fgColor="D4EDDA")
YELLOW_FILL = PatternFill("solid", fgColor="FFF3CD")
RED_FILL = PatternFill("solid", fgColor="F8D7DA")
GRAY_FILL = PatternFill("solid", fgColor="E2E3E5")

PASS_FONT = Font(color="0F5132", bold=True)
FAIL_FONT = Font(color="842029", bold=True)

THIN_BORDER = Border(
    left=Side(style="thin", color="DEE2E6"),
    right=Side(style="thin", color="DEE2E6"),
    top=Side(style="thin", color="DEE2E6"),
    bottom=Side(style="thin", color="DEE2E6"),
)


class TableSummary(NamedTuple):
    file: str
    experiment: str
    table: str
    config_hash: str
    rows: int
    errors: int
    worst_rel_dev: float
    failed_checks: int

    @property
    def passed(self) -> bool:
        if self.errors or self.failed_checks:
            return False
        return math.isnan(self.worst_rel_dev) or self.worst_rel_dev <= REL_DEV_WARN


def rel_dev_fill(value: float):
    if math.isnan(value):
        return GRAY_FILL
    if value <= REL_DEV_GOOD:
        return GREEN_FILL
    elif value <= REL_DEV_WARN:
        return YELLOW_FILL
    return RED_FILL


def style_header(ws, col_count):
    for col in range(1, col_count + 1):
        cell = ws.cell(row=1, column=col)
        cell.fill = HEADER_FILL
        cell.font = HEADER_FONT
        cell.alignment = HEADER_ALIGNMENT
        cell.border = THIN_BORDER


def auto_width(ws, col_count, max_width=40):
    for col in range(1, col_count + 1):
        width = 0
        for row in ws.iter_rows(min_col=col, max_col=col):
            for cell in row:
                if cell.value is not None:
                    width = max(width, len(str(cell.value)))
        ws.column_dimensions[get_column_letter(col)].width = min(width + 3, max_width)


def cell_value(text: str):
    """CSV strings back to numbers where they parse; 'nan' stays a string."""
    if text in ("true", "false"):
        return text == "true"
    try:
        number = float(text)
    except ValueError:
        return text
    if math.isnan(number):
        return text
    return int(number) if number.is_integer() and "." not in text and "e" not in text else number


def _as_float(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        return math.nan


def summarize(path: Path, meta: dict, columns: list[str], rows: list[list[str]]) -> TableSummary:
    errors = 0
    if "error" in columns:
        idx = columns.index("error")
        errors = sum(1 for r in rows if r[idx])
    worst = math.nan
    if "rel_dev" in columns:
        values = [_as_float(r[columns.index("rel_dev")]) for r in rows]
        values = [v for v in values if not math.isnan(v)]
        worst = max(values) if values else math.nan
    failed = 0
    if "passed" in columns:
        failed = sum(1 for r in rows if r[columns.index("passed")] != "true")
    return TableSummary(path.name, meta.get("experiment", ""), meta.get("table", ""),
                        meta.get("config_hash", ""), len(rows), errors, worst, failed)


def write_overview_sheet(wb, summaries: list[TableSummary]):
    ws = wb.active
    ws.title = "Overview"

    ws.cell(row=1, column=1, value="Experiment Report").font = Font(bold=True, size=14)
    ws.cell(row=2, column=1,
            value=f"Generated: {datetime.now().strftime('%Y-%m-%d %H:%M')}  |  "
                  f"deviation thresholds {REL_DEV_GOOD:.0%} / {REL_DEV_WARN:.0%}"
            ).font = Font(color="555555")

    headers = ["File", "Experiment", "Table", "Config hash", "Rows", "Errors",
               "Worst rel_dev", "Failed checks", "Status"]
    header_row = 4
    for ci, h in enumerate(headers, 1):
        c = ws.cell(row=header_row, column=ci, value=h)
        c.fill = HEADER_FILL
        c.font = HEADER_FONT
        c.alignment = HEADER_ALIGNMENT
        c.border = THIN_BORDER

    for ri, s in enumerate(summaries, header_row + 1):
        worst = "-" if math.isnan(s.worst_rel_dev) else round(s.worst_rel_dev, 4)
        cells = [s.file, s.experiment, s.table, s.config_hash, s.rows, s.errors, worst,
                 s.failed_checks, "PASS" if s.passed else "FAIL"]
        for ci, val in enumerate(cells, 1):
            ws.cell(row=ri, column=ci, value=val).border = THIN_BORDER
        ws.cell(row=ri, column=6).fill = RED_FILL if s.errors else GREEN_FILL
        ws.cell(row=ri, column=7).fill = rel_dev_fill(s.worst_rel_dev)
        status = ws.cell(row=ri, column=9)
        status.font = PASS_FONT if s.passed else FAIL_FONT
        status.fill = GREEN_FILL if s.passed else RED_FILL

    ws.freeze_panes = ws.cell(row=header_row + 1, column=1)
    auto_width(ws, len(headers))


def _sheet_title(wb, path: Path) -> str:
    base = path.stem[:MAX_SHEET_TITLE]
    title, n = base, 1
    while title in wb.sheetnames:
        n += 1
        suffix = f"~{n}"
        title = base[:MAX_SHEET_TITLE - len(suffix)] + suffix
    return title


def write_table_sheet(wb, path: Path, columns: list[str], rows: list[list[str]]):
    ws = wb.create_sheet(_sheet_title(wb, path))
    ws.append(columns)
    style_header(ws, len(columns))

    rel_col = columns.index("rel_dev") + 1 if "rel_dev" in columns else None
    err_col = columns.index("error") + 1 if "error" in columns else None
    pass_col = columns.index("passed") + 1 if "passed" in columns else None
    for row in rows:
        ws.append([cell_value(v) for v in row])
        row_num = ws.max_row
        for col in range(1, len(columns) + 1):
            ws.cell(row=row_num, column=col).border = THIN_BORDER

        if rel_col:
            ws.cell(row=row_num, column=rel_col).fill = rel_dev_fill(_as_float(row[rel_col - 1]))
        if err_col and row[err_col - 1]:
            ws.cell(row=row_num, column=err_col).fill = RED_FILL
        if pass_col:
            ok = row[pass_col - 1] == "true"
            cell = ws.cell(row=row_num, column=pass_col)
            cell.fill = GREEN_FILL if ok else RED_FILL
            cell.font = PASS_FONT if ok else FAIL_FONT

    ws.auto_filter.ref = ws.dimensions
    ws.freeze_panes = "A2"
    auto_width(ws, len(columns))


def build_report(directory: Path, output: Path | None = None) -> tuple[Path, list[TableSummary]]:
    directory = Path(directory)
    paths = sorted(directory.glob("*.csv"))
    logger.info("report over %d tables in %s", len(paths), directory)

    wb = Workbook()
    summaries = []
    tables = []
    for path in paths:
        meta, columns, rows = read_table(path)
        summaries.append(summarize(path, meta, columns, rows))
        tables.append((path, columns, rows))
    write_overview_sheet(wb, summaries)
    for path, columns, rows in tables:
        write_table_sheet(wb, path, columns, rows)

    if output is None:
        timestamp = datetime.now().strftime("%Y-%m-%d_%H%M%S")
        output = directory / f"report_{timestamp}.xlsx"
    wb.save(output)
    return Path(output), summaries
