"""Column data files.

Layout::

    # key = value            (any number of metadata lines)
    # columns: name[unit]<TAB>name[unit]...
    1.0<TAB>2.5
    ...

Floats use the shortest repr that round-trips, complex columns are split
into ``name.re`` and ``name.im``, and text cells are written verbatim (they
must not contain tabs or newlines).  :func:`read_table` parses every file
that :func:`write_table` produces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ConfigError

COLUMNS_PREFIX = "# columns: "


@dataclass
class Table:
    """Named columns with units plus ordered metadata."""

    columns: list[str]
    units: list[str]
    rows: list[list]
    meta: dict[str, str] = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        try:
            j = self.columns.index(name)
        except ValueError:
            raise KeyError(name) from None
        return np.array([r[j] for r in self.rows])

    def __len__(self):
        return len(self.rows)


def format_cell(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return repr(x)
    s = str(x)
    if "\t" in s or "\n" in s:
        raise ValueError(f"text cell {s!r} contains a tab or newline")
    return s


def _parse_cell(s: str):
    try:
        return float(s)
    except ValueError:
        return s


def _expand(columns, units, data):
    """Split complex columns into real and imaginary parts."""
    names, unit_out, cols = [], [], []
    for name, unit, col in zip(columns, units, data):
        arr = np.asarray(col)
        if np.iscomplexobj(arr):
            names += [f"{name}.re", f"{name}.im"]
            unit_out += [unit, unit]
            cols += [arr.real, arr.imag]
        else:
            names.append(name)
            unit_out.append(unit)
            cols.append(arr if arr.dtype != object else list(col))
    return names, unit_out, cols


def format_table(columns, units, data, meta=None) -> str:
    """Render columns ``data`` (one sequence per column) as text."""
    if not (len(columns) == len(units) == len(data)):
        raise ValueError("columns, units and data must have equal length")
    names, unit_out, cols = _expand(columns, units, data)
    n = {len(c) for c in cols}
    if len(n) > 1:
        raise ValueError(f"ragged columns: lengths {sorted(n)}")
    lines = []
    for key, value in (meta or {}).items():
        lines.append(f"# {key} = {format_meta(value)}")
    header = "\t".join(f"{c}[{u}]" for c, u in zip(names, unit_out))
    lines.append(COLUMNS_PREFIX + header)
    nrows = n.pop() if n else 0
    for i in range(nrows):
        lines.append("\t".join(format_cell(c[i]) for c in cols))
    return "\n".join(lines) + "\n"


def format_meta(value) -> str:
    if isinstance(value, (tuple, list)):
        return ", ".join(format_cell(v) for v in value)
    return format_cell(value)


def write_table(path, columns, units, data, meta=None) -> Path:
    path = Path(path)
    path.write_text(format_table(columns, units, data, meta), encoding="utf-8")
    return path


def parse_table(text: str) -> Table:
    meta: dict[str, str] = {}
    columns = units = None
    rows = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line:
            continue
        if line.startswith(COLUMNS_PREFIX):
            columns, units = [], []
            for spec in line[len(COLUMNS_PREFIX) :].split("\t"):
                if not spec.endswith("]") or "[" not in spec:
                    raise ConfigError(f"line {lineno}: malformed column header {spec!r}")
                name, unit = spec[:-1].split("[", 1)
                columns.append(name)
                units.append(unit)
        elif line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                k, v = body.split("=", 1)
                meta[k.strip()] = v.strip()
        else:
            if columns is None:
                raise ConfigError(f"line {lineno}: data before the column header")
            cells = line.split("\t")
            if len(cells) != len(columns):
                raise ConfigError(f"line {lineno}: expected {len(columns)} cells, found {len(cells)}")
            rows.append([_parse_cell(c) for c in cells])
    if columns is None:
        raise ConfigError("missing column header")
    return Table(columns, units, rows, meta)


def read_table(path) -> Table:
    return parse_table(Path(path).read_text(encoding="utf-8"))
