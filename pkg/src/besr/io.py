"""CSV/JSON emission and ingestion.

CSV dialect: ``#``-prefixed comment lines (``# key: value``) carrying
provenance and units, then one header row, then comma-separated rows.
Floats are written with 17 significant digits so a re-read is exact.
All writes go through a temporary file in the target directory followed by
an atomic rename.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .trace import Trace


def atomic_write(path, data: str | bytes) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, mode, **({} if mode == "wb" else {"encoding": "utf-8", "newline": ""})) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v)) if np.isfinite(v) else ("nan" if np.isnan(v) else
                                                      ("inf" if v > 0 else "-inf"))
    if v is None:
        return ""
    return str(v)


@dataclass
class Table:
    columns: list
    rows: list
    meta: dict = field(default_factory=dict)  # ordered provenance comments
    units: dict = field(default_factory=dict)  # column -> unit
    header_line: int = field(default=1, compare=False)  # 1-based, set by the parser
    row_lines: list = field(default_factory=list, compare=False)

    def column(self, name):
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    def to_csv(self) -> str:
        buf = io.StringIO()
        for k, v in self.meta.items():
            buf.write(f"# {k}: {v}\n")
        if self.units:
            buf.write("# units: " + ", ".join(f"{c}={self.units[c]}" for c in self.columns
                                              if c in self.units) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([format_value(v) for v in r])
        return buf.getvalue()

    def to_json(self) -> str:
        def js(v):
            if isinstance(v, (float, np.floating)):
                return float(v) if np.isfinite(v) else None
            if isinstance(v, (np.integer,)):
                return int(v)
            if isinstance(v, np.bool_):
                return bool(v)
            return v
        doc = {"meta": self.meta, "units": self.units, "columns": self.columns,
               "rows": [[js(v) for v in r] for r in self.rows]}
        return json.dumps(doc, indent=1) + "\n"

    def write(self, path, fmt: str = "csv") -> Path:
        path = Path(path)
        if fmt == "json":
            return atomic_write(path.with_suffix(".json"), self.to_json())
        return atomic_write(path.with_suffix(".csv"), self.to_csv())


def _parse_cell(text):
    if text == "":
        return None
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def parse_csv(text: str, source: str = "<string>") -> Table:
    meta, units = {}, {}
    lines = text.splitlines()
    i = 0
    while i < len(lines) and (lines[i].startswith("#") or not lines[i].strip()):
        line = lines[i]
        if line.startswith("#") and ":" in line:
            k, v = line[1:].split(":", 1)
            k, v = k.strip(), v.strip()
            if k == "units":
                for part in filter(None, (p.strip() for p in v.split(","))):
                    c, _, u = part.partition("=")
                    units[c.strip()] = u.strip()
            else:
                meta[k] = v
        i += 1
    if i >= len(lines):
        raise ConfigError("no header row", line=i + 1, column=1, source=source)
    header_line = i + 1
    reader = csv.reader(lines[i:])
    columns = [c.strip() for c in next(reader)]
    rows, row_lines = [], []
    for offset, rec in enumerate(reader, start=1):
        lineno = header_line + offset
        if not rec or all(not c.strip() for c in rec):
            continue
        if rec[0].lstrip().startswith("#"):
            continue
        if len(rec) != len(columns):
            raise ConfigError(f"expected {len(columns)} fields, found {len(rec)}",
                              line=lineno, column=1, source=source)
        rows.append([_parse_cell(c.strip()) for c in rec])
        row_lines.append(lineno)
    return Table(columns=columns, rows=rows, meta=meta, units=units, header_line=header_line,
                 row_lines=row_lines)


def read_csv(path) -> Table:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {p}: {exc.strerror}", source=str(p)) from None
    return parse_csv(text, source=str(p))


def _numeric_column(table: Table, name: str, source: str):
    if name not in table.columns:
        raise ConfigError(f"missing column {name!r} (have {', '.join(table.columns)})",
                          line=_header_line(table), column=1, source=source)
    j = table.columns.index(name)
    out = []
    for k, r in enumerate(table.rows):
        v = r[j]
        if not isinstance(v, (int, float)):
            raise ConfigError(f"column {name!r}: not a number: {v!r}",
                              line=_row_line(table, k), column=j + 1, source=source)
        out.append(float(v))
    return np.array(out)


def _header_line(table: Table) -> int:
    return table.header_line


def _row_line(table: Table, k: int) -> int:
    return table.row_lines[k] if k < len(table.row_lines) else table.header_line + 1 + k


# Recognised column layouts for fit inputs: kind -> list of (x col, y col, sigma col,
# x factor to SI, axis kind)
LAYOUTS = {
    "decay": [("time_s", "amplitude", None, 1.0, "time")],
    "sweep": [("field_mT", "kappa_MHz", None, 1e-3, "field"),
              ("freq_GHz", "kappa_MHz", None, 2e9 * np.pi, "frequency")],
    "temperature": [("T_mK", "T1_s", "T1_err_s", 1e-3, "temperature")],
    "power": [("B_mT", "T1_s", None, 1e-3, "field"),
              ("field_mT", "T1_s", None, 1e-3, "field")],
}


def table_to_trace(table: Table, kind: str, source: str = "<string>") -> Trace:
    if kind not in LAYOUTS:
        raise ConfigError(f"unknown data kind {kind!r}", source=source)
    for xcol, ycol, scol, factor, axis in LAYOUTS[kind]:
        if xcol in table.columns and ycol in table.columns:
            x = _numeric_column(table, xcol, source) * factor
            y = _numeric_column(table, ycol, source)
            sigma = None
            if scol and scol in table.columns:
                s = _numeric_column(table, scol, source)
                if np.all(s > 0):
                    sigma = s
            order = np.argsort(x, kind="stable")
            x, y = x[order], y[order]
            sigma = None if sigma is None else sigma[order]
            if np.any(np.diff(x) <= 0):
                raise ConfigError(f"column {xcol!r} has repeated values", source=source)
            return Trace(x, y, sigma=sigma, axis_kind=axis, meta={"source": source})
    wanted = " or ".join(f"{a},{b}" for a, b, *_ in LAYOUTS[kind])
    raise ConfigError(f"{kind} data needs columns {wanted}", line=_header_line(table),
                      column=1, source=source)


def write_json(path, doc) -> Path:
    return atomic_write(Path(path), json.dumps(doc, indent=2, sort_keys=False) + "\n")
