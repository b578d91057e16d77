"""
Report emission as JSON or CSV
"""

import csv
import io
import json
import logging
import sys
from pathlib import Path
from typing import Iterable, List, Optional, Sequence

from ..verify.report import serializable

logger = logging.getLogger(__name__)

INSTANCE_COLUMNS = ("instance", "protocol", "success", "bound", "note")
STAR_COLUMNS = ("k", "rho", "nu", "limit_prob", "lower_estimate", "slope")
RATIO_COLUMNS = ("k", "rho", "n", "best_function", "best_value", "limit_prob", "ratio")
HIT_COLUMNS = ("k1", "k2", "mixed", "best_simple", "best_function", "ratio")
CHECK_COLUMNS = ("name", "trials", "worst_slack", "passed", "tolerance")


def format_cell(value) -> str:
    """17 significant digits for reals, empty for missing values"""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def to_csv(rows: Iterable[dict], columns: Sequence[str]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_cell(serializable(row.get(c))) for c in columns])
    return buffer.getvalue()


def to_json(payload) -> str:
    return json.dumps(serializable(payload), indent=2) + "\n"


def emit(payload, rows: Optional[List[dict]], columns: Sequence[str], output_format: str,
         output_path: Optional[Path] = None):
    """
    Write a report to the output file or standard output

    Args:
        payload: Full JSON report
        rows: Flattened records for CSV output
        columns: Stable CSV header
        output_format: "json" or "csv"
        output_path: Destination; standard output when None
    """
    text = to_csv(rows or [], columns) if output_format == "csv" else to_json(payload)
    if output_path is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with open(output_path, 'w', encoding='utf-8', newline='') as f:
        f.write(text)
    logger.info(f"Wrote {output_format} report to {output_path}")
