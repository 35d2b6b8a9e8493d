"""CSV/JSON readers and writers, run manifests and schema lookup.

Series files hold one series per column and one time step per row, with a
header of series names. Floats are written with 17 significant digits so a
write/read round trip is lossless.
"""

from __future__ import annotations

import csv
import hashlib
import json
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .errors import AmbiguousColumns, EmptyFile, ParseError, RaggedData
from .spectral import Spectrum, TimeSeriesSet
from .spikes import Recording

TIME_COLUMNS = {"t", "time"}
_FLOAT_FMT = ".17g"


def fmt(v: float) -> str:
    return format(float(v), _FLOAT_FMT)


def _parse_float(cell: str, row: int, col: int, path) -> float:
    try:
        v = float(cell)
    except ValueError:
        raise ParseError(f"non-numeric cell {cell!r}", row=row, col=col, path=path) from None
    if not np.isfinite(v):
        raise ParseError(f"non-finite cell {cell!r}", row=row, col=col, path=path)
    return v


def _read_rows(path) -> list[list[str]]:
    text = Path(path).read_text()
    rows = [r for r in csv.reader(text.splitlines()) if any(c.strip() for c in r)]
    if not rows:
        raise EmptyFile(f"{path}: file is empty")
    return rows


def read_series_csv(path) -> TimeSeriesSet:
    """Read a header-plus-columns CSV into a TimeSeriesSet.

    A first column headed ``t`` or ``time`` is treated as the time index and
    dropped. Error locations are 1-based: ``row`` counts data rows after the
    header, ``col`` counts file columns.
    """
    rows = _read_rows(path)
    header = [h.strip() for h in rows[0]]
    body = rows[1:]
    if not body:
        raise EmptyFile(f"{path}: header but no data rows")
    skip = 1 if header and header[0].lower() in TIME_COLUMNS else 0
    names = header[skip:]
    if not names:
        raise EmptyFile(f"{path}: no series columns")
    values = np.empty((len(body), len(names)))
    for r, row in enumerate(body, start=1):
        if len(row) != len(header):
            raise RaggedData(f"{path}: data row {r} has {len(row)} fields, header has {len(header)}")
        for c in range(skip, len(header)):
            cell = row[c].strip()
            if cell == "":
                raise RaggedData(f"{path}: data row {r}, col {c + 1} is empty; series lengths differ")
            values[r - 1, c - skip] = _parse_float(cell, r, c + 1, path)
    return TimeSeriesSet(values.T, labels=names)


def write_series_csv(path, data: TimeSeriesSet, time_column: bool = False) -> None:
    names = list(data.labels) if data.labels else [f"s{i}" for i in range(data.n_series)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow((["t"] if time_column else []) + names)
        for t in range(data.length):
            w.writerow(([str(t)] if time_column else []) + [fmt(v) for v in data.values[:, t]])


_NUMBER = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$|^[+-]?(inf|nan)$", re.IGNORECASE)


def _is_number(tok: str) -> bool:
    return bool(_NUMBER.match(tok.strip()))


def read_recording(path, sample_rate: float | None = None) -> Recording:
    """Read a single column of samples (CSV or whitespace separated).

    An optional header row is allowed. With several columns, the one named
    ``y`` is used; without such a column the file is ambiguous.
    """
    text = Path(path).read_text()
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise EmptyFile(f"{path}: file is empty")
    split = (lambda ln: [c.strip() for c in ln.split(",")]) if "," in text else (lambda ln: ln.split())
    first = split(lines[0])
    header = None
    if not all(_is_number(tok) for tok in first):
        header = first
        lines = lines[1:]
        if not lines:
            raise EmptyFile(f"{path}: header but no samples")
    ncols = len(header) if header else len(first)
    if ncols == 1:
        col = 0
    elif header and "y" in header:
        col = header.index("y")
    elif header is None and "," not in text:
        # bare whitespace-separated stream of numbers
        toks = text.split()
        return Recording(np.array([_parse_float(t, i + 1, 1, path) for i, t in enumerate(toks)]), sample_rate)
    else:
        raise AmbiguousColumns(f"{path}: {ncols} columns and none named 'y'")
    samples = []
    for r, ln in enumerate(lines, start=1):
        cells = split(ln)
        if len(cells) != ncols:
            raise RaggedData(f"{path}: row {r} has {len(cells)} fields, expected {ncols}")
        samples.append(_parse_float(cells[col], r, col + 1, path))
    return Recording(np.array(samples), sample_rate)


def write_recording(path, rec: Recording) -> None:
    with open(path, "w") as fh:
        fh.write("y\n")
        for v in rec.samples:
            fh.write(fmt(v) + "\n")


def write_spectra_csv(path, spectra: list[Spectrum], names: list[str]) -> None:
    """Long format: one row per (series, bin) with frequency j / T."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["series", "j", "omega", "power"])
        for name, s in zip(names, spectra):
            for j, om, p in zip(s.bins, s.frequencies, s.power):
                w.writerow([name, int(j), fmt(om), fmt(p)])


def read_spectra_csv(path, n_samples: int, kind: str = "raw") -> tuple[list[str], list[Spectrum]]:
    rows = _read_rows(path)
    if [h.strip() for h in rows[0]] != ["series", "j", "omega", "power"]:
        raise ParseError("expected header series,j,omega,power", row=0, path=path)
    order: list[str] = []
    powers: dict[str, list[float]] = {}
    for r, row in enumerate(rows[1:], start=1):
        if len(row) != 4:
            raise RaggedData(f"{path}: row {r} has {len(row)} fields")
        name = row[0]
        if name not in powers:
            order.append(name)
            powers[name] = []
        powers[name].append(_parse_float(row[3], r, 4, path))
    return order, [Spectrum(np.array(powers[n]), n_samples=n_samples, kind=kind) for n in order]


def write_table_csv(path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow(["" if v is None else fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return "sha256:" + h.hexdigest()


@dataclass
class RunManifest:
    command: str
    config: dict[str, Any]
    inputs: dict[str, str] = field(default_factory=dict)
    version: str = __version__
    timestamp: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat(timespec="seconds"))

    @classmethod
    def for_inputs(cls, command: str, config: dict, paths) -> "RunManifest":
        return cls(command, config, {str(p): file_digest(p) for p in paths})

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "config": self.config,
            "inputs": self.inputs,
            "version": self.version,
            "timestamp": self.timestamp,
        }


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if np.isfinite(v) else None
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path, payload: dict) -> None:
    Path(path).write_text(json.dumps(to_jsonable(payload), indent=2, sort_keys=True) + "\n")


def load_schema(name: str) -> dict:
    """JSON schema shipped with the package, e.g. ``load_schema("cluster")``."""
    ref = resources.files("specem").joinpath("schemas", f"{name}.schema.json")
    return json.loads(ref.read_text())
