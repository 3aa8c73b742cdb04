"""Parsing of benchmark result CSVs against the exact column contract.

The benchmark harness and this renderer share nothing but the file format,
so the schema is pinned here verbatim: any unknown, missing, or reordered
column is a hard error naming the offender, never a silent best-effort
parse.
"""

import csv
from dataclasses import dataclass

COLUMNS = (
    "space",
    "method",
    "n",
    "d",
    "rep",
    "seed",
    "fit_seconds",
    "predict_seconds",
    "mse",
    "solver_calls_fit",
    "solver_calls_predict",
    "status",
)

_INT_COLUMNS = frozenset(
    {"n", "d", "rep", "seed", "solver_calls_fit", "solver_calls_predict"}
)
_FLOAT_COLUMNS = frozenset({"fit_seconds", "predict_seconds", "mse"})


class SchemaError(ValueError):
    """The CSV deviates from the benchmark results contract."""


@dataclass(frozen=True)
class ResultRow:
    space: str
    method: str
    n: int
    d: int
    rep: int
    seed: int
    fit_seconds: float
    predict_seconds: float
    mse: float
    solver_calls_fit: int
    solver_calls_predict: int
    status: str


@dataclass
class ResultsFrame:
    """Parsed rows plus the path they came from (for error messages)."""

    path: str
    rows: list

    def ok_rows(self, space: str | None = None) -> list:
        """Successful rows, optionally restricted to one space."""
        rows = [r for r in self.rows if r.status == "ok"]
        if space is not None:
            rows = [r for r in rows if r.space == space]
        return rows


def check_header(header) -> None:
    """Compare a header row against the contract, naming the first offender."""
    for i, (want, got) in enumerate(zip(COLUMNS, header)):
        if want != got:
            raise SchemaError(f"column {i + 1}: expected {want!r}, got {got!r}")
    if len(header) > len(COLUMNS):
        raise SchemaError(f"unexpected column {header[len(COLUMNS)]!r}")
    if len(header) < len(COLUMNS):
        raise SchemaError(f"missing column {COLUMNS[len(header)]!r}")


def _convert(name: str, raw: str, lineno: int):
    try:
        if name in _INT_COLUMNS:
            return int(raw)
        if name in _FLOAT_COLUMNS:
            return float(raw)
        return raw
    except ValueError:
        raise SchemaError(
            f"line {lineno}: column {name!r}: cannot parse {raw!r}"
        ) from None


def load_results(path) -> ResultsFrame:
    """Read and validate a benchmark CSV; the input file is never written."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError("empty file: missing header row") from None
        check_header(header)
        rows = []
        for lineno, record in enumerate(reader, start=2):
            if len(record) != len(COLUMNS):
                raise SchemaError(
                    f"line {lineno}: expected {len(COLUMNS)} fields, "
                    f"got {len(record)}"
                )
            values = {
                name: _convert(name, raw, lineno)
                for name, raw in zip(COLUMNS, record)
            }
            rows.append(ResultRow(**values))
    return ResultsFrame(path=str(path), rows=rows)
