"""
CSV and JSON report writers.

CSV rows carry every float with 17 significant digits so fits recomputed
from a report match the ones printed by the command. JSON reports are
versioned with a ``"schema"`` field and written with sorted keys, which
keeps outputs byte-identical for a fixed seed.
"""

import csv
import io
import json
import logging
import math
import os
from typing import Any, Dict, List, Mapping, Optional, Sequence, TextIO

import numpy as np

logger = logging.getLogger("ftl.reports")

SCHEMA_VERSION = 1


def format_value(value: Any) -> str:
    """Render one CSV cell."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    if isinstance(value, (complex, np.complexfloating)):
        z = complex(value)
        return f"{format(z.real, '.17g')}{'+' if z.imag >= 0 or math.isnan(z.imag) else '-'}{format(abs(z.imag), '.17g')}j"
    if isinstance(value, (list, tuple, np.ndarray)):
        return " ".join(format_value(v) for v in np.asarray(value).ravel().tolist())
    return str(value)


def columns_of(rows: Sequence[Mapping[str, Any]]) -> List[str]:
    """Column order: keys of the first row, then new keys as they appear."""
    columns: List[str] = []
    for row in rows:
        for key in row:
            if key not in columns:
                columns.append(key)
    return columns


def write_csv(
    rows: Sequence[Mapping[str, Any]],
    target: Optional[str] = None,
    columns: Optional[Sequence[str]] = None,
    stream: Optional[TextIO] = None,
) -> str:
    """
    Write rows as CSV to a file, a stream or just a string.

    Args:
        rows: One mapping per grid point
        target: File path (parent directories are created)
        columns: Column order (defaults to columns_of(rows))
        stream: Open text stream, used when no path is given

    Returns:
        The CSV text
    """
    header = list(columns) if columns is not None else columns_of(rows)
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_value(row.get(key)) for key in header])
    text = buffer.getvalue()
    if target:
        _ensure_parent(target)
        with open(target, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        logger.info(f"Wrote {len(rows)} rows to {target}")
    elif stream is not None:
        stream.write(text)
    return text


def read_csv(path: str) -> List[Dict[str, str]]:
    with open(path, "r", encoding="utf-8", newline="") as f:
        return list(csv.DictReader(f))


def jsonable(value: Any) -> Any:
    """Convert numpy values, tuples and non-finite floats for json.dumps."""
    if isinstance(value, Mapping):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, np.ndarray):
        return jsonable(value.tolist())
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        x = float(value)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(value, (complex, np.complexfloating)):
        z = complex(value)
        return [jsonable(z.real), jsonable(z.imag)]
    if hasattr(value, "to_dict"):
        return jsonable(value.to_dict())
    return value


def build_report(command: str, domain: str, payload: Mapping[str, Any], **extra: Any) -> Dict[str, Any]:
    report: Dict[str, Any] = {"schema": SCHEMA_VERSION, "command": command, "domain": domain}
    report.update(extra)
    report.update(payload)
    return jsonable(report)


def dumps_report(report: Mapping[str, Any]) -> str:
    return json.dumps(jsonable(report), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(report: Mapping[str, Any], target: Optional[str] = None, stream: Optional[TextIO] = None) -> str:
    """Write a JSON report to a path or a stream and return the text."""
    text = dumps_report(report)
    if target:
        _ensure_parent(target)
        with open(target, "w", encoding="utf-8") as f:
            f.write(text)
        logger.info(f"Wrote JSON report to {target}")
    elif stream is not None:
        stream.write(text)
    return text


def emit(
    command: str,
    domain: str,
    rows: Sequence[Mapping[str, Any]],
    summary: Mapping[str, Any],
    csv_path: Optional[str],
    json_path: Optional[str],
    stream: TextIO,
    prefer: str = "csv",
) -> None:
    """
    Write a command's reports.

    Rows go to ``csv_path`` and the JSON report (summary plus rows) to
    ``json_path``. Whatever has no path is printed to ``stream`` in the
    command's preferred format.
    """
    report = build_report(command, domain, summary, rows=list(rows))
    if csv_path:
        write_csv(rows, csv_path)
    if json_path:
        write_json(report, json_path)
    if csv_path or json_path:
        return
    if prefer == "csv" and rows:
        write_csv(rows, stream=stream)
        for key, value in sorted(summary.items()):
            if isinstance(value, (Mapping, list)):
                stream.write(f"# {key}: {json.dumps(jsonable(value), sort_keys=True)}\n")
            else:
                stream.write(f"# {key}: {format_value(value) if not isinstance(value, str) else value}\n")
    else:
        write_json(report, stream=stream)


def _ensure_parent(path: str) -> None:
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)

