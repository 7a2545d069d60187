"""CSV/JSON emission helpers: fixed formats so outputs are byte-stable."""

from __future__ import annotations

import json
import math

CSV_EOL = "\r\n"


def format_cell(v) -> str:
    if v is None:
        return "nan"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        return format(v, ".17g")
    s = str(v)
    if any(ch in s for ch in ',"\n\r'):
        s = '"' + s.replace('"', '""') + '"'
    return s


def csv_text(header: list[str], rows: list[dict], comments: list[str] | None = None) -> str:
    lines = [f"# {c}" for c in (comments or [])]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(format_cell(row[h]) for h in header))
    return CSV_EOL.join(lines) + CSV_EOL


def write_csv(path, header: list[str], rows: list[dict],
              comments: list[str] | None = None) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(csv_text(header, rows, comments))


def json_text(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"
