"""CSV tables with a reproducibility header.

Every table opens with comment lines pinning provenance:

    # groundedness <version>
    # config <canonical JSON of the producing configuration>
    # config_hash <first 12 hex chars of sha256 over that JSON>
    # units <nats|bits|none>
    # timestamp <ISO-8601 UTC>

then a CSV header row and data rows. The canonical JSON is sorted-key,
compact-separator, so the hash is stable across dict orderings. The timestamp
is the only line that may differ between reruns with identical inputs;
dropping it must make outputs byte-identical.

Floats are written with repr (exact round trip), NaN as "nan", None as "".
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass
from datetime import datetime, timezone

from . import __version__


def canonical_config(config: dict) -> str:
    return json.dumps(config, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def config_hash(config: dict) -> str:
    return hashlib.sha256(canonical_config(config).encode("utf-8")).hexdigest()[:12]


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def render_table(columns, rows, *, config: dict, units: str = "nats",
                 timestamp: str | None = None) -> str:
    if timestamp is None:
        timestamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
    buf = io.StringIO()
    buf.write(f"# groundedness {__version__}\n")
    buf.write(f"# config {canonical_config(config)}\n")
    buf.write(f"# config_hash {config_hash(config)}\n")
    buf.write(f"# units {units}\n")
    buf.write(f"# timestamp {timestamp}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def write_table(path: str, columns, rows, *, config: dict, units: str = "nats",
                timestamp: str | None = None) -> None:
    text = render_table(columns, rows, config=config, units=units, timestamp=timestamp)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


@dataclass
class Table:
    meta: dict[str, str]       # comment-line key -> raw value
    columns: list[str]
    rows: list[list[str]]      # cells as written; callers parse as needed

    def column(self, name: str) -> list[str]:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    def floats(self, name: str) -> list[float]:
        return [float(c) for c in self.column(name)]


def read_table(path: str) -> Table:
    meta: dict[str, str] = {}
    body: list[str] = []
    with open(path, encoding="utf-8", newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                parts = line[1:].strip().split(" ", 1)
                if parts and parts[0]:
                    meta[parts[0]] = parts[1] if len(parts) > 1 else ""
            else:
                body.append(line)
    rows = list(csv.reader(body))
    if not rows:
        return Table(meta=meta, columns=[], rows=[])
    return Table(meta=meta, columns=rows[0], rows=rows[1:])
