"""Raster data model, ESRI ASCII grid I/O and legend handling.

Rasters keep their cells as a read-only ``(nrows, ncols)`` numpy array with
the north row first, exactly as the rows appear in an ``.asc`` file.  Missing
cells carry the header's ``nodata_value``; every arithmetic helper in the
package treats nodata as absorbing.
"""

from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import AlignmentError, GridFormatError, ValidationError

HEADER_KEYS = ("ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "nodata_value")

# float() would also accept "nan", "inf" and "1_000"; grids may not.
_NUMBER = re.compile(r"^[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?$")
_INTEGER = re.compile(r"^\+?\d+$")

ALIGN_TOL = 1e-9


def _parse_number(token, lineno):
    if not _NUMBER.match(token):
        raise GridFormatError(f"unparseable number {token!r}", lineno)
    return float(token)


def format_number(value: float) -> str:
    """Shortest text that parses back to ``value`` (integers without a dot)."""
    value = float(value)
    if value.is_integer() and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


@dataclass(frozen=True)
class GridHeader:
    ncols: int
    nrows: int
    xllcorner: float
    yllcorner: float
    cellsize: float
    nodata_value: float = -9999.0

    def __post_init__(self):
        if int(self.ncols) != self.ncols or self.ncols < 1:
            raise ValidationError(f"ncols must be a positive integer, got {self.ncols}")
        if int(self.nrows) != self.nrows or self.nrows < 1:
            raise ValidationError(f"nrows must be a positive integer, got {self.nrows}")
        if not (self.cellsize > 0 and math.isfinite(self.cellsize)):
            raise ValidationError(f"cellsize must be positive, got {self.cellsize}")
        object.__setattr__(self, "ncols", int(self.ncols))
        object.__setattr__(self, "nrows", int(self.nrows))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nrows, self.ncols)

    @property
    def cell_area(self) -> float:
        return self.cellsize * self.cellsize

    def with_nodata(self, nodata_value: float) -> GridHeader:
        return GridHeader(self.ncols, self.nrows, self.xllcorner, self.yllcorner,
                          self.cellsize, nodata_value)


def _frozen(array, dtype):
    out = np.array(array, dtype=dtype, copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class NumericRaster:
    header: GridHeader
    cells: np.ndarray

    def __post_init__(self):
        cells = np.asarray(self.cells, dtype=np.float64)
        if cells.size != self.header.ncols * self.header.nrows:
            raise ValidationError(
                f"raster has {cells.size} cells, header declares "
                f"{self.header.nrows}x{self.header.ncols}")
        object.__setattr__(self, "cells", _frozen(cells.reshape(self.header.shape), np.float64))

    @property
    def missing(self) -> np.ndarray:
        """Boolean mask of nodata cells."""
        nodata = self.header.nodata_value
        mask = np.isnan(self.cells)
        if not math.isnan(nodata):
            mask |= self.cells == nodata
        return mask

    def valid_values(self) -> np.ndarray:
        return self.cells[~self.missing]

    def __eq__(self, other):
        if not isinstance(other, NumericRaster):
            return NotImplemented
        return (self.header == other.header
                and np.array_equal(self.missing, other.missing)
                and np.array_equal(self.cells[~self.missing], other.cells[~other.missing]))

    __hash__ = None


@dataclass(frozen=True)
class Legend:
    """Mapping from integer class code to class label."""

    entries: Mapping[int, str]

    def __post_init__(self):
        entries = {int(code): str(label) for code, label in dict(self.entries).items()}
        if not entries:
            raise ValidationError("legend is empty")
        labels = list(entries.values())
        if len(set(labels)) != len(labels):
            dupes = sorted({lab for lab in labels if labels.count(lab) > 1})
            raise ValidationError(f"legend labels are not unique: {dupes}")
        object.__setattr__(self, "entries", dict(sorted(entries.items())))

    def __getitem__(self, code: int) -> str:
        return self.entries[code]

    def __contains__(self, code) -> bool:
        return code in self.entries

    def __len__(self):
        return len(self.entries)

    @property
    def labels(self) -> list[str]:
        return list(self.entries.values())

    def code_for(self, label: str) -> int:
        for code, lab in self.entries.items():
            if lab == label:
                return code
        raise KeyError(label)

    def __hash__(self):
        return hash(tuple(self.entries.items()))


@dataclass(frozen=True, eq=False)
class CategoricalRaster:
    header: GridHeader
    codes: np.ndarray
    legend: Legend

    def __post_init__(self):
        if not float(self.header.nodata_value).is_integer():
            raise ValidationError("categorical rasters need an integral nodata_value")
        codes = np.asarray(self.codes)
        if codes.size != self.header.ncols * self.header.nrows:
            raise ValidationError(
                f"raster has {codes.size} cells, header declares "
                f"{self.header.nrows}x{self.header.ncols}")
        if codes.dtype.kind == "f":
            if not np.all(np.isfinite(codes)) or not np.all(codes == np.round(codes)):
                raise ValidationError("categorical raster cells must be integers")
        codes = codes.astype(np.int64).reshape(self.header.shape)
        present = set(np.unique(codes[codes != self.nodata_code]).tolist())
        unknown = sorted(present - set(self.legend.entries))
        if unknown:
            raise ValidationError(f"codes {unknown} are not in the legend")
        object.__setattr__(self, "codes", _frozen(codes, np.int64))

    @property
    def nodata_code(self) -> int:
        return int(self.header.nodata_value)

    @property
    def missing(self) -> np.ndarray:
        return self.codes == self.nodata_code

    def label_counts(self) -> dict[str, int]:
        """Cell count per legend label (labels absent from the grid get 0)."""
        values, counts = np.unique(self.codes[~self.missing], return_counts=True)
        tally = dict(zip(values.tolist(), counts.tolist()))
        return {label: tally.get(code, 0) for code, label in self.legend.entries.items()}

    @classmethod
    def from_numeric(cls, raster: NumericRaster, legend: Legend) -> CategoricalRaster:
        return cls(raster.header, raster.cells, legend)

    def to_numeric(self) -> NumericRaster:
        return NumericRaster(self.header, self.codes.astype(np.float64))


# -- ASCII grid -------------------------------------------------------------

def parse_ascii_grid(text: str) -> NumericRaster:
    """Parse ESRI ASCII grid text (six header lines, then north-first rows)."""
    lines = text.splitlines()
    values = {}
    for idx in range(6):
        lineno = idx + 1
        if idx >= len(lines):
            raise GridFormatError("truncated header", lineno)
        parts = lines[idx].split()
        if len(parts) != 2:
            raise GridFormatError(f"malformed header line {lines[idx]!r}", lineno)
        key = parts[0].lower()
        if key not in HEADER_KEYS:
            raise GridFormatError(f"malformed header key {parts[0]!r}", lineno)
        if key in values:
            raise GridFormatError(f"duplicate header key {parts[0]!r}", lineno)
        if key in ("ncols", "nrows"):
            if not _INTEGER.match(parts[1]):
                raise GridFormatError(f"{key} must be a positive integer, got {parts[1]!r}", lineno)
            values[key] = int(parts[1])
        else:
            values[key] = _parse_number(parts[1], lineno)
    try:
        header = GridHeader(**values)
    except ValidationError as exc:
        raise GridFormatError(str(exc)) from exc

    rows = []
    last_lineno = 6
    for idx in range(6, len(lines)):
        lineno = idx + 1
        tokens = lines[idx].split()
        if not tokens:
            continue
        last_lineno = lineno
        if len(rows) == header.nrows:
            raise GridFormatError(f"cell count mismatch: more than {header.nrows} rows", lineno)
        if len(tokens) != header.ncols:
            raise GridFormatError(
                f"cell count mismatch: expected {header.ncols} values, found {len(tokens)}", lineno)
        rows.append([_parse_number(tok, lineno) for tok in tokens])
    if len(rows) != header.nrows:
        raise GridFormatError(
            f"cell count mismatch: expected {header.nrows} rows, found {len(rows)}", last_lineno)
    return NumericRaster(header, np.array(rows, dtype=np.float64))


def serialize_ascii_grid(raster: NumericRaster, decimals: int = 6) -> str:
    """Render ``raster`` as ESRI ASCII grid text with fixed-point cells."""
    if not 0 <= decimals <= 15:
        raise ValueError(f"decimals must be in 0..15, got {decimals}")
    h = raster.header
    out = io.StringIO()
    out.write(f"ncols {h.ncols}\n")
    out.write(f"nrows {h.nrows}\n")
    out.write(f"xllcorner {format_number(h.xllcorner)}\n")
    out.write(f"yllcorner {format_number(h.yllcorner)}\n")
    out.write(f"cellsize {format_number(h.cellsize)}\n")
    nodata_token = format_number(h.nodata_value)
    out.write(f"NODATA_value {nodata_token}\n")
    missing = raster.missing
    for r in range(h.nrows):
        row = raster.cells[r]
        tokens = [nodata_token if missing[r, c] else f"{row[c]:.{decimals}f}"
                  for c in range(h.ncols)]
        out.write(" ".join(tokens))
        out.write("\n")
    return out.getvalue()


def read_ascii_grid(path) -> NumericRaster:
    with open(path, encoding="utf-8") as fh:
        return parse_ascii_grid(fh.read())


def write_ascii_grid(path, raster, decimals=6):
    if isinstance(raster, CategoricalRaster):
        raster, decimals = raster.to_numeric(), 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(serialize_ascii_grid(raster, decimals))


# -- legends and score tables -----------------------------------------------

def parse_legend_csv(text: str) -> Legend:
    """Parse a ``code,label`` CSV."""
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["code", "label"]:
        raise ValidationError("legend CSV must have header 'code,label'")
    entries = {}
    for lineno, row in enumerate(reader, start=2):
        code_text = (row.get("code") or "").strip()
        if not re.match(r"^[+-]?\d+$", code_text):
            raise ValidationError(f"legend line {lineno}: bad code {code_text!r}")
        code = int(code_text)
        if code in entries:
            raise ValidationError(f"legend line {lineno}: duplicate code {code}")
        entries[code] = (row.get("label") or "").strip()
    return Legend(entries)


def legend_to_csv(legend: Legend) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["code", "label"])
    for code, label in legend.entries.items():
        writer.writerow([code, label])
    return out.getvalue()


def parse_scores_csv(text: str) -> dict[str, float]:
    """Parse a ``label,score`` CSV into a dict."""
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["label", "score"]:
        raise ValidationError("score CSV must have header 'label,score'")
    scores = {}
    for lineno, row in enumerate(reader, start=2):
        label = (row.get("label") or "").strip()
        token = (row.get("score") or "").strip()
        if not _NUMBER.match(token):
            raise ValidationError(f"score line {lineno}: bad score {token!r}")
        if label in scores:
            raise ValidationError(f"score line {lineno}: duplicate label {label!r}")
        scores[label] = float(token)
    return scores


def read_categorical(grid_path, legend_path) -> CategoricalRaster:
    raster = read_ascii_grid(grid_path)
    with open(legend_path, encoding="utf-8") as fh:
        legend = parse_legend_csv(fh.read())
    return CategoricalRaster.from_numeric(raster, legend)


# -- operations -------------------------------------------------------------

def apply_legend_scores(raster: CategoricalRaster, scores: Mapping[str, float]) -> NumericRaster:
    """Replace each class code with the score of its legend label."""
    lookup = {}
    for code, label in raster.legend.entries.items():
        if label not in scores:
            raise ValidationError(f"no score for legend label {label!r}")
        lookup[code] = float(scores[label])
    out = np.full(raster.header.shape, raster.header.nodata_value, dtype=np.float64)
    for code, value in lookup.items():
        out[raster.codes == code] = value
    return NumericRaster(raster.header, out)


def assert_aligned(headers: Sequence[GridHeader]) -> None:
    """Raise :class:`AlignmentError` unless all headers describe one grid."""
    headers = [h.header if hasattr(h, "header") else h for h in headers]
    if not headers:
        raise ValueError("assert_aligned needs at least one header")
    ref = headers[0]
    for other in headers[1:]:
        for name in ("ncols", "nrows"):
            if getattr(other, name) != getattr(ref, name):
                raise AlignmentError(
                    name, f"{name} differs: {getattr(ref, name)} vs {getattr(other, name)}")
        for name in ("cellsize", "xllcorner", "yllcorner"):
            a, b = getattr(ref, name), getattr(other, name)
            if not abs(a - b) <= ALIGN_TOL:
                raise AlignmentError(name, f"{name} differs: {a!r} vs {b!r}")


def union_missing(rasters: Sequence) -> np.ndarray:
    mask = np.zeros(rasters[0].header.shape, dtype=bool)
    for r in rasters:
        mask |= r.missing
    return mask
