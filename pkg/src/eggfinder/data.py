"""Data matrix container and CSV input/output."""

from __future__ import annotations

import csv
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .exceptions import CsvFormatError


@dataclass(frozen=True)
class DataMatrix:
    """A numeric data matrix with named variables.

    Observations are rows, variables are columns. Variable names are unique.
    """

    values: np.ndarray
    variable_names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError(f"expected a 2-D matrix, got shape {values.shape}")
        object.__setattr__(self, "values", values)
        names = tuple(str(n) for n in self.variable_names)
        if not names:
            names = tuple(f"x{i + 1}" for i in range(values.shape[1]))
        if len(names) != values.shape[1]:
            raise ValueError(
                f"{len(names)} variable names for {values.shape[1]} columns"
            )
        if len(set(names)) != len(names):
            raise ValueError("variable names must be unique")
        object.__setattr__(self, "variable_names", names)

    @property
    def n_observations(self) -> int:
        return self.values.shape[0]

    @property
    def n_variables(self) -> int:
        return self.values.shape[1]

    def select(self, indices) -> "DataMatrix":
        """New matrix keeping only the given columns, in the given order."""
        idx = list(indices)
        return DataMatrix(
            values=self.values[:, idx],
            variable_names=tuple(self.variable_names[i] for i in idx),
        )


def atomic_write_text(path, text: str) -> None:
    """Write text to path via a temp file and rename, so readers never see
    a partial file."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _parse_cell(cell: str, line: int, column_name: str) -> float:
    try:
        return float(cell)
    except ValueError:
        raise CsvFormatError(
            f"line {line}, column '{column_name}': cannot parse {cell!r} as a number",
            line=line,
            column=column_name,
        ) from None


def load_csv(path, transpose: bool = False) -> DataMatrix:
    """Load a data matrix from CSV.

    Default layout: header row of variable names, then one row per
    observation. With ``transpose=True`` the layout is flipped: the header
    row holds observation labels (its first cell is a corner label and is
    ignored), and each following row is one variable, name first.

    Raises
    ------
    CsvFormatError
        On ragged rows, unparseable cells, or an empty file. Messages name
        the offending line and column.
    """
    with open(path, newline="", encoding="utf-8") as handle:
        rows = [row for row in csv.reader(handle)]
    rows = [row for row in rows if row and not all(cell.strip() == "" for cell in row)]
    if not rows:
        raise CsvFormatError(f"{path}: no rows found")
    if transpose:
        return _parse_transposed(rows)
    header = [cell.strip() for cell in rows[0]]
    if any(not name for name in header):
        raise CsvFormatError("line 1: empty variable name in header", line=1)
    data = []
    for offset, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise CsvFormatError(
                f"line {offset}: expected {len(header)} cells, got {len(row)}",
                line=offset,
            )
        data.append(
            [_parse_cell(cell.strip(), offset, header[j]) for j, cell in enumerate(row)]
        )
    if not data:
        raise CsvFormatError("no observation rows after the header", line=1)
    return DataMatrix(values=np.asarray(data, dtype=np.float64), variable_names=tuple(header))


def _parse_transposed(rows) -> DataMatrix:
    width = len(rows[0])
    names = []
    columns = []
    for offset, row in enumerate(rows[1:], start=2):
        if len(row) != width:
            raise CsvFormatError(
                f"line {offset}: expected {width} cells, got {len(row)}",
                line=offset,
            )
        name = row[0].strip()
        if not name:
            raise CsvFormatError(f"line {offset}: empty variable name", line=offset)
        names.append(name)
        columns.append([_parse_cell(cell.strip(), offset, name) for cell in row[1:]])
    if not columns:
        raise CsvFormatError("no variable rows after the header", line=1)
    return DataMatrix(values=np.asarray(columns, dtype=np.float64).T, variable_names=tuple(names))


def save_csv(data: DataMatrix, path) -> None:
    """Write a data matrix as CSV with a header row.

    Numbers are written with repr so a load round-trips bitwise.
    """
    lines = [",".join(data.variable_names)]
    for row in data.values:
        lines.append(",".join(repr(float(v)) for v in row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_group_labels(path) -> list[str]:
    """Load one group label per line. Blank lines are skipped."""
    with open(path, encoding="utf-8") as handle:
        labels = [line.strip() for line in handle]
    return [label for label in labels if label]
