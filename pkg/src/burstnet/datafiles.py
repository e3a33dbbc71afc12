"""CSV emission and parsing with a leading '#'-prefixed JSON metadata line.

Every data file this package writes starts with one comment line holding the
resolved configuration (spec, seed, command parameters) as JSON, followed by
a plain CSV header and rows.  Floats are written with repr-level precision so
reruns with identical inputs are byte-identical.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path


def format_value(v) -> str:
    if isinstance(v, float):
        return format(v, ".17g")
    if v is None:
        return ""
    return str(v)


def write_table(path: Path | str, metadata: dict, columns: list[str],
                rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    buf.write("# " + json.dumps(metadata, sort_keys=True) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(v) for v in row])
    path.write_text(buf.getvalue())
    return path


def read_table(path: Path | str) -> tuple[dict, list[str], list[list[str]]]:
    path = Path(path)
    with path.open() as fh:
        first = fh.readline()
        if not first.startswith("#"):
            raise ValueError(f"{path}: missing '#' metadata line")
        metadata = json.loads(first.lstrip("#").strip())
        reader = csv.reader(fh)
        columns = next(reader)
        rows = [row for row in reader if row]
    return metadata, columns, rows
