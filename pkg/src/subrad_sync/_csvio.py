"""CSV emission shared by trajectory and sweep exports."""

from __future__ import annotations

import json
from pathlib import Path

from . import __version__


def header_line(meta: dict) -> str:
    return f"# subrad-sync {__version__} {json.dumps(meta, sort_keys=True)}"


def fmt(value) -> str:
    if isinstance(value, str):
        return value
    return f"{float(value):.16e}"


def write_csv(path, columns, rows, meta: dict, footer: list[str] | None = None) -> Path:
    """Write a comment header, a column line and one line per row.

    Floats use 17 significant digits so the file round-trips exactly.
    """
    path = Path(path)
    lines = [header_line(meta), ",".join(columns)]
    lines.extend(",".join(fmt(v) for v in row) for row in rows)
    lines.extend(f"# {text}" for text in footer or [])
    path.write_text("\n".join(lines) + "\n")
    return path


def read_csv(path):
    """Parse a file written by :func:`write_csv` into ``(meta, columns, rows)``."""
    meta, columns, rows = None, None, []
    for line in Path(path).read_text().splitlines():
        if line.startswith("# subrad-sync"):
            meta = json.loads(line.split(" ", 3)[3])
        elif line.startswith("#"):
            continue
        elif columns is None:
            columns = line.split(",")
        else:
            rows.append([float(v) if _is_float(v) else v for v in line.split(",")])
    return meta, columns, rows


def _is_float(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True
