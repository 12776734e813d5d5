"""Tabular results with reproducibility metadata.

CSV is the primary format: '#'-prefixed metadata lines (tool version, the
fully resolved config as one JSON line, wall time), then a header row and
comma-separated data rows.  JSON mirrors the same content.  Floats are
printed with shortest round-trip representation (up to 17 significant
digits), so feeding the echoed config back reproduces files bitwise up to
the wall-time line.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field


def fmt_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass
class ResultTable:
    columns: list
    rows: list
    metadata: dict = field(default_factory=dict)

    def csv_text(self) -> str:
        lines = [f"# {key}: {_meta_str(val)}" for key, val in self.metadata.items()]
        lines.append(",".join(self.columns))
        for row in self.rows:
            lines.append(",".join(fmt_value(v) for v in row))
        return "\n".join(lines) + "\n"

    def json_text(self) -> str:
        payload = {
            "metadata": self.metadata,
            "columns": list(self.columns),
            "rows": [list(r) for r in self.rows],
        }
        return json.dumps(payload, indent=1, sort_keys=False) + "\n"

    def write(self, path, fmt: str = "csv") -> None:
        text = self.csv_text() if fmt == "csv" else self.json_text()
        if path is None:
            sys.stdout.write(text)
        else:
            with open(path, "w") as fh:
                fh.write(text)


def _meta_str(val) -> str:
    if isinstance(val, (dict, list)):
        return json.dumps(val, sort_keys=True)
    return fmt_value(val)
