"""Read and write delimiter-separated expression tables (one gene per row)."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from typing import IO, Sequence, Union

import numpy as np

from .core import ChannelPairMatrix, ExpressionMatrix, GenesiftError

log = logging.getLogger(__name__)

DEFAULT_MISSING_TOKENS = frozenset({"", "NA", "NaN", "null"})

Column = Union[int, str]


class ParseError(GenesiftError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


@dataclass(frozen=True)
class TableSchema:
    """Column layout of an input table.

    `value_columns` is a list of columns in log-ratio mode and a list of
    (red, green) column pairs in two-channel mode. ``None`` means "every
    column except the ID" (log-ratio mode only).
    """

    id_column: Column = 0
    value_columns: Sequence | None = None
    missing_tokens: frozenset = field(default=DEFAULT_MISSING_TOKENS)
    delimiter: str = "\t"
    has_header: bool = True

    def __post_init__(self):
        if len(self.delimiter) != 1:
            raise ValueError("delimiter must be a single character")
        if self.value_columns is not None:
            if len(self.value_columns) == 0:
                raise ValueError("value_columns must not be empty")
            flat = []
            for col in self.value_columns:
                flat.extend(col if isinstance(col, (tuple, list)) else [col])
            if self.id_column in flat:
                raise ValueError("id_column cannot also be a value column")
        object.__setattr__(self, "missing_tokens", frozenset(self.missing_tokens))


def _resolve(col: Column, header: list[str] | None, width: int) -> int:
    if isinstance(col, str):
        if header is None:
            raise ParseError(f"column name {col!r} given but the table has no header")
        try:
            return header.index(col)
        except ValueError:
            raise ParseError(f"column {col!r} not in header", 1) from None
    if not 0 <= col < width:
        raise ParseError(f"column index {col} out of range for {width} columns", 1)
    return col


def _cell(text: str, tokens, counter: list) -> float:
    text = text.strip()
    if text in tokens:
        return math.nan
    try:
        value = float(text)
    except ValueError:
        counter[0] += 1
        return math.nan
    if not math.isfinite(value):
        counter[0] += 1
        return math.nan
    return value


def parse_table(source: IO[str], schema: TableSchema | None = None, mode: str = "log_ratios"):
    """Parse a table into an ExpressionMatrix (log_ratios) or ChannelPairMatrix (two_channel).

    Missing tokens and unparseable numbers become masked cells. Raises
    ParseError for an empty input, a row of the wrong width (with its
    1-based line number) or duplicate sample labels.
    """
    schema = schema or TableSchema()
    if mode not in ("log_ratios", "two_channel"):
        raise ValueError(f"unknown mode {mode!r}")
    reader = csv.reader(source, delimiter=schema.delimiter, quoting=csv.QUOTE_NONE)
    rows: list[tuple[int, list[str]]] = []
    for fields_ in reader:
        if not fields_:
            continue
        rows.append((reader.line_num, fields_))
    if not rows:
        raise ParseError("empty input")

    header = None
    if schema.has_header:
        header_line, header = rows[0]
        rows = rows[1:]
        width = len(header)
    else:
        width = len(rows[0][1])
    for line, fields_ in rows:
        if len(fields_) != width:
            raise ParseError(f"expected {width} fields, found {len(fields_)}", line)

    id_idx = _resolve(schema.id_column, header, width)
    if mode == "log_ratios":
        if schema.value_columns is None:
            value_idx = [i for i in range(width) if i != id_idx]
        else:
            value_idx = [_resolve(c, header, width) for c in schema.value_columns]
        if not value_idx:
            raise ParseError("no value columns")
        labels = [header[i] for i in value_idx] if header else [f"t{k}" for k in range(len(value_idx))]
    else:
        if schema.value_columns is None:
            raise ParseError("two-channel mode needs explicit (red, green) column pairs")
        pairs = [(_resolve(r, header, width), _resolve(g, header, width)) for r, g in schema.value_columns]
        labels = [header[r] for r, _ in pairs] if header else [f"t{k}" for k in range(len(pairs))]
    if len(set(labels)) != len(labels):
        raise ParseError("duplicate sample labels", 1 if header else None)

    gene_ids = [fields_[id_idx].strip() for _, fields_ in rows]
    bad = [0]
    tokens = schema.missing_tokens
    if mode == "log_ratios":
        values = np.array(
            [[_cell(fields_[j], tokens, bad) for j in value_idx] for _, fields_ in rows], dtype=float
        ).reshape(len(rows), len(value_idx))
        if bad[0]:
            log.warning("%d unparseable numeric cell(s) treated as missing", bad[0])
        return ExpressionMatrix(gene_ids, labels, values, np.isnan(values))

    red = np.array([[_cell(f[r], tokens, bad) for r, _ in pairs] for _, f in rows], dtype=float)
    green = np.array([[_cell(f[g], tokens, bad) for _, g in pairs] for _, f in rows], dtype=float)
    red = red.reshape(len(rows), len(pairs))
    green = green.reshape(len(rows), len(pairs))
    if bad[0]:
        log.warning("%d unparseable numeric cell(s) treated as missing", bad[0])
    negative = (red < 0) | (green < 0)
    if negative.any():
        raise ParseError("negative channel intensity", rows[int(np.argwhere(negative)[0][0])][0])
    return ChannelPairMatrix(gene_ids, labels, red, green, np.isnan(red) | np.isnan(green))


def format_value(x: float) -> str:
    """Shortest decimal string that parses back to the same double."""
    return repr(float(x))


def write_table(matrix: ExpressionMatrix, sink: IO[str], delimiter: str = "\t", missing_token: str = "NA") -> None:
    """Write `matrix` so that parse_table reads it back unchanged."""
    for text in (*matrix.gene_ids, *matrix.sample_labels):
        if delimiter in text or "\n" in text or "\r" in text:
            raise ValueError(f"identifier {text!r} contains the delimiter or a newline")
    sink.write(delimiter.join(["id", *matrix.sample_labels]) + "\n")
    for gid, row, mask in zip(matrix.gene_ids, matrix.values, matrix.missing):
        cells = [missing_token if m else format_value(v) for v, m in zip(row, mask)]
        sink.write(delimiter.join([gid, *cells]) + "\n")
