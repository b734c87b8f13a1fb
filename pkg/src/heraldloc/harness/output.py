"""Writing a ResultSet: one CSV per table plus ``manifest.json``, all or nothing."""
from __future__ import annotations

import csv
import io
import json
import os
from pathlib import Path

from ..errors import HeraldlocError
from .presets import ResultSet


class OutputError(HeraldlocError, OSError):
    pass


def _cell(value) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, int):
        return str(value)
    if hasattr(value, "dtype") and value.dtype.kind in "iu":
        return str(int(value))
    if isinstance(value, float) or hasattr(value, "dtype"):
        return repr(float(value))
    return str(value)


def table_csv(columns, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def emit(results: ResultSet, directory, formats=("csv", "json")) -> list[Path]:
    """Write tables and manifest into ``directory``.

    Files are staged under temporary names and renamed only once every write has
    succeeded; on failure all staged and renamed files are removed and OutputError raised.
    """
    directory = Path(directory)
    staged: list[tuple[Path, Path]] = []
    placed: list[Path] = []
    try:
        directory.mkdir(parents=True, exist_ok=True)
        manifest = dict(results.manifest)
        if "csv" in formats:
            manifest["tables"] = {}
            for name, table in results.tables.items():
                final = directory / f"{name}.csv"
                tmp = directory / f".{name}.csv.partial"
                staged.append((tmp, final))
                tmp.write_text(table_csv(table.columns, table.rows), encoding="utf-8")
                manifest["tables"][name] = {"file": final.name, "columns": list(table.columns),
                                            "rows": len(table.rows)}
        if "json" in formats:
            final = directory / "manifest.json"
            tmp = directory / ".manifest.json.partial"
            staged.append((tmp, final))
            tmp.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        for tmp, final in staged:
            os.replace(tmp, final)
            placed.append(final)
    except OSError as exc:
        for tmp, _ in staged:
            tmp.unlink(missing_ok=True)
        for final in placed:
            final.unlink(missing_ok=True)
        raise OutputError(f"cannot write results to {directory}: {exc}") from exc
    return placed
