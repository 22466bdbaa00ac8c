"""Result records and their CSV / JSON serialization."""

from __future__ import annotations

import hashlib
import io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import __version__

FLOAT_FORMAT = "{:.12g}"


@dataclass
class ResultRecord:
    command: str
    config: dict
    series: dict[str, dict[str, list]] = field(default_factory=dict)
    scalars: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)
    generated: str | None = None
    run_id: str = ""

    def __post_init__(self):
        self.provenance.setdefault("engine_version", __version__)
        if not self.run_id:
            self.run_id = make_run_id(self.command, self.config)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ResultRecord":
        return cls(**data)

    def to_json(self) -> str:
        return json.dumps(_json_safe(self.to_dict()), indent=2, sort_keys=True, allow_nan=False) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ResultRecord":
        return cls.from_dict(_json_restore(json.loads(text)))


def make_run_id(command: str, config: dict) -> str:
    payload = json.dumps({"command": command, "config": _json_safe(config)}, sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


# NaN / inf are not JSON; encode them as tagged strings so records round-trip exactly
_SPECIAL = {"NaN": math.nan, "Infinity": math.inf, "-Infinity": -math.inf}


def _json_safe(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return {"__float__": "NaN" if math.isnan(obj) else ("Infinity" if obj > 0 else "-Infinity")}
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


def _json_restore(obj):
    if isinstance(obj, dict):
        if set(obj) == {"__float__"}:
            return _SPECIAL[obj["__float__"]]
        return {k: _json_restore(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_json_restore(v) for v in obj]
    return obj


def format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return "nan" if math.isnan(value) else FLOAT_FORMAT.format(value)
    return str(value)


def series_to_csv(columns: dict[str, list]) -> str:
    names = list(columns)
    rows = zip(*(columns[n] for n in names))
    buf = io.StringIO(newline="")
    buf.write(",".join(names) + "\n")
    for row in rows:
        buf.write(",".join(format_cell(v) for v in row) + "\n")
    return buf.getvalue()


def record_to_csv(record: ResultRecord) -> str:
    """All series of a record, each preceded by a ``# series:`` line when there are several."""
    parts = []
    if record.generated:
        parts.append(f"# generated {record.generated}\n")
    many = len(record.series) > 1
    for name, cols in record.series.items():
        if many:
            parts.append(f"# series: {name}\n")
        parts.append(series_to_csv(cols))
    if not record.series and record.scalars:
        parts.append(series_to_csv({k: [v] for k, v in record.scalars.items()}))
    return "".join(parts)


def write_record(record: ResultRecord, path: str | Path | None, fmt: str) -> list[Path]:
    """Write a record; CSV with several series goes to one file per series.

    Returns the paths written (empty when printing to stdout).
    """
    if fmt == "json":
        text = record.to_json()
        if path is None:
            print(text, end="")
            return []
        Path(path).write_text(text, newline="\n")
        return [Path(path)]
    if path is None:
        print(record_to_csv(record), end="")
        return []
    path = Path(path)
    header = f"# generated {record.generated}\n" if record.generated else ""
    if len(record.series) <= 1:
        path.write_text(record_to_csv(record), newline="\n")
        return [path]
    written = []
    for name, cols in record.series.items():
        p = path.with_name(f"{path.stem}_{name}{path.suffix or '.csv'}")
        p.write_text(header + series_to_csv(cols), newline="\n")
        written.append(p)
    return written
