"""Loading and validation of the three input tables, and flow-tensor assembly.

Input files are UTF-8 CSV with a header row:

    transitions.csv: year,origin,destination,count
    employment.csv:  year,industry,employment
    sectors.csv:     industry,sector

Column names must match exactly; extra columns are rejected.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .errors import ParseError, ValidationError

TRANSITION_COLUMNS = ["year", "origin", "destination", "count"]
EMPLOYMENT_COLUMNS = ["year", "industry", "employment"]
SECTOR_COLUMNS = ["industry", "sector"]


class DataWarning(UserWarning):
    """Non-fatal data issue, e.g. a diagonal flow row being zeroed."""


@dataclass(frozen=True)
class TransitionTable:
    """Aggregated worker transition counts, one row per (year, origin, destination)."""

    frame: pd.DataFrame  # columns: year, origin, destination, count

    @property
    def years(self):
        return sorted(self.frame["year"].unique().tolist())

    @property
    def industries(self):
        ids = set(self.frame["origin"]) | set(self.frame["destination"])
        return sorted(ids)


@dataclass(frozen=True)
class EmploymentTable:
    """Employment counts, one row per (year, industry)."""

    frame: pd.DataFrame  # columns: year, industry, employment

    @property
    def years(self):
        return sorted(self.frame["year"].unique().tolist())

    @property
    def industries(self):
        return sorted(set(self.frame["industry"]))

    def for_year(self, year: int) -> dict[str, float]:
        sub = self.frame[self.frame["year"] == year]
        return dict(zip(sub["industry"], sub["employment"].astype(float)))


@dataclass(frozen=True)
class FlowTensor:
    """Per-year dense transition-count matrices over a shared industry index.

    The diagonal is forced to zero: within-industry job switches are not
    inter-industry skill sharing and are excluded from all downstream sums.
    """

    index: tuple[str, ...]
    years: tuple[int, ...]
    matrices: dict[int, np.ndarray] = field(repr=False)

    @property
    def n(self) -> int:
        return len(self.index)

    def position(self, industry: str) -> int:
        return self.index.index(industry)

    def matrix(self, year: int) -> np.ndarray:
        if year not in self.matrices:
            raise ValueError(f"year {year} not in flow tensor (have {list(self.years)})")
        return self.matrices[year]

    def marginals(self, year: int) -> np.ndarray:
        """Total flow touching each industry in a year: row sum plus column sum."""
        f = self.matrix(year)
        return f.sum(axis=1) + f.sum(axis=0)

    def total(self, year: int) -> float:
        return float(self.matrix(year).sum())

    def to_edgelist(self) -> pd.DataFrame:
        rows = []
        for year in self.years:
            f = self.matrices[year]
            for i, j in zip(*np.nonzero(f)):
                rows.append((year, self.index[i], self.index[j], int(f[i, j])))
        return pd.DataFrame(rows, columns=TRANSITION_COLUMNS)


def _read_rows(path, expected_columns):
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot open {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file", line=1)
        if header != expected_columns:
            raise ValidationError(
                f"{path}: header {header!r} does not match required columns {expected_columns!r}"
            )
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(expected_columns):
                raise ParseError(
                    f"{path}: expected {len(expected_columns)} fields, got {len(row)}",
                    line=lineno,
                )
            rows.append((lineno, row))
    return rows


def _parse_int(value, what, path, lineno, nonnegative=False):
    try:
        out = int(value)
    except ValueError:
        raise ParseError(f"{path}: {what} {value!r} is not an integer", line=lineno)
    if nonnegative and out < 0:
        raise ValidationError(f"{path}: {what} {out} is negative (line {lineno})")
    return out


def load_transitions(path) -> TransitionTable:
    """Load and validate a transition CSV; duplicate (year, origin, destination) rows are summed."""
    records = []
    for lineno, (year, origin, destination, count) in _read_rows(path, TRANSITION_COLUMNS):
        records.append(
            (
                _parse_int(year, "year", path, lineno),
                origin,
                destination,
                _parse_int(count, "count", path, lineno, nonnegative=True),
            )
        )
    frame = pd.DataFrame(records, columns=TRANSITION_COLUMNS)
    frame = (
        frame.groupby(["year", "origin", "destination"], as_index=False, sort=True)["count"]
        .sum()
    )
    frame = frame[TRANSITION_COLUMNS]
    return TransitionTable(frame=frame)


def load_employment(path) -> EmploymentTable:
    """Load and validate an employment CSV; duplicate (year, industry) rows are summed."""
    records = []
    for lineno, (year, industry, employment) in _read_rows(path, EMPLOYMENT_COLUMNS):
        records.append(
            (
                _parse_int(year, "year", path, lineno),
                industry,
                _parse_int(employment, "employment", path, lineno, nonnegative=True),
            )
        )
    frame = pd.DataFrame(records, columns=EMPLOYMENT_COLUMNS)
    frame = frame.groupby(["year", "industry"], as_index=False, sort=True)["employment"].sum()
    frame = frame[EMPLOYMENT_COLUMNS]
    return EmploymentTable(frame=frame)


def load_sectors(path) -> dict[str, str]:
    """Load the industry -> sector map; conflicting duplicate assignments are rejected."""
    mapping: dict[str, str] = {}
    for lineno, (industry, sector) in _read_rows(path, SECTOR_COLUMNS):
        if industry in mapping and mapping[industry] != sector:
            raise ValidationError(
                f"{path}: industry {industry!r} mapped to both "
                f"{mapping[industry]!r} and {sector!r} (line {lineno})"
            )
        mapping[industry] = sector
    return mapping


def build_flow_tensor(
    table: TransitionTable,
    years,
    extra_industries=(),
) -> FlowTensor:
    """Assemble per-year flow matrices on the union industry index.

    Industries appearing in any year (or passed via ``extra_industries``, e.g.
    employment-only industries) share one index; the diagonal is zeroed with a
    warning when same-industry rows are present.
    """
    years = sorted(int(y) for y in years)
    if not years:
        raise ValueError("year range is empty")
    index = tuple(sorted(set(table.industries) | set(extra_industries)))
    pos = {ind: k for k, ind in enumerate(index)}
    n = len(index)
    matrices = {y: np.zeros((n, n)) for y in years}
    dropped = 0
    for row in table.frame.itertuples(index=False):
        if row.year not in matrices:
            continue
        if row.origin == row.destination:
            dropped += int(row.count)
            continue
        matrices[row.year][pos[row.origin], pos[row.destination]] += row.count
    if dropped:
        warnings.warn(
            f"zeroed {dropped} within-industry transition(s) on the diagonal",
            DataWarning,
            stacklevel=2,
        )
    return FlowTensor(index=index, years=tuple(years), matrices=matrices)
