"""CSV ingestion, column profiling, and the dataset summary shown to the LLM.

Profiling is deterministic and pure: identical input bytes always produce an
identical :class:`Dataset`, including its id. All rules that the CSV format
leaves open are pinned here:

- Nulls: the empty string, ``NA``, ``NaN`` and ``null`` (case-insensitive).
- Type inference on non-null values, first match wins:
  numeric (>= 95% parse as decimal numbers), boolean (all values in
  ``{true, false, yes, no, 0, 1}``, case-insensitive), categorical
  (distinct count <= max(20, 5% of rows)), datetime (>= 95% match ISO-8601
  or ``DD/MM/YYYY``), else text. A column with no non-null values is text.
- Ragged rows are padded with nulls; cells beyond the header are dropped.
- ``std`` is the sample standard deviation (n-1); a single value gives 0.
- ``sample_values`` are the first five distinct non-null values in file
  order.
"""

from __future__ import annotations

import csv
import hashlib
import io
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DuplicateColumn, EmptyFile, UnknownDataset

NULL_TOKENS = frozenset({"", "na", "nan", "null"})
BOOLEAN_TOKENS = frozenset({"true", "false", "yes", "no", "0", "1"})

NUMERIC_RE = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")
ISO_DATETIME_RE = re.compile(
    r"^\d{4}-\d{2}-\d{2}([T ]\d{2}:\d{2}(:\d{2}(\.\d+)?)?(Z|[+-]\d{2}:?\d{2})?)?$"
)
SLASH_DATE_RE = re.compile(r"^\d{1,2}/\d{1,2}/\d{4}$")

PARSE_FRACTION = 0.95
FREQUENCY_TABLE_CAP = 20
SAMPLE_VALUE_CAP = 5
SUMMARY_CELL_CAP = 60


def is_null(raw: str) -> bool:
    return raw.strip().lower() in NULL_TOKENS


def parses_numeric(raw: str) -> bool:
    return NUMERIC_RE.match(raw.strip()) is not None


def parses_datetime(raw: str) -> bool:
    s = raw.strip()
    return ISO_DATETIME_RE.match(s) is not None or SLASH_DATE_RE.match(s) is not None


@dataclass
class NumericStats:
    min: float
    max: float
    mean: float
    std: float
    q1: float
    q2: float
    q3: float
    count: int

    def to_json_dict(self) -> dict:
        return {
            "min": self.min,
            "max": self.max,
            "mean": self.mean,
            "std": self.std,
            "quartiles": [self.q1, self.q2, self.q3],
            "count": self.count,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "NumericStats":
        q1, q2, q3 = d["quartiles"]
        return cls(d["min"], d["max"], d["mean"], d["std"], q1, q2, q3, d["count"])


@dataclass
class CategoricalStats:
    distinct_count: int
    frequency_table: list[tuple[str, int]]

    def to_json_dict(self) -> dict:
        return {
            "distinct_count": self.distinct_count,
            "frequency_table": [[v, c] for v, c in self.frequency_table],
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "CategoricalStats":
        return cls(d["distinct_count"], [(v, c) for v, c in d["frequency_table"]])


@dataclass
class ColumnProfile:
    name: str
    inferred_type: str  # numeric | categorical | text | boolean | datetime
    null_count: int
    sample_values: list[str]
    numeric_stats: NumericStats | None = None
    categorical_stats: CategoricalStats | None = None

    def to_json_dict(self) -> dict:
        return {
            "name": self.name,
            "inferred_type": self.inferred_type,
            "null_count": self.null_count,
            "sample_values": list(self.sample_values),
            "numeric_stats": self.numeric_stats.to_json_dict() if self.numeric_stats else None,
            "categorical_stats": (
                self.categorical_stats.to_json_dict() if self.categorical_stats else None
            ),
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "ColumnProfile":
        return cls(
            name=d["name"],
            inferred_type=d["inferred_type"],
            null_count=d["null_count"],
            sample_values=list(d["sample_values"]),
            numeric_stats=NumericStats.from_json_dict(d["numeric_stats"])
            if d.get("numeric_stats")
            else None,
            categorical_stats=CategoricalStats.from_json_dict(d["categorical_stats"])
            if d.get("categorical_stats")
            else None,
        )


@dataclass
class Dataset:
    id: str
    name: str
    row_count: int
    columns: list[ColumnProfile] = field(default_factory=list)
    source_ref: str = ""

    def column_names(self) -> list[str]:
        return [c.name for c in self.columns]

    def to_json_dict(self) -> dict:
        return {
            "id": self.id,
            "name": self.name,
            "row_count": self.row_count,
            "columns": [c.to_json_dict() for c in self.columns],
            "source_ref": self.source_ref,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "Dataset":
        return cls(
            id=d["id"],
            name=d["name"],
            row_count=d["row_count"],
            columns=[ColumnProfile.from_json_dict(c) for c in d["columns"]],
            source_ref=d.get("source_ref", ""),
        )


def _infer_type(non_null: Sequence[str], total_rows: int) -> str:
    if not non_null:
        return "text"
    n = len(non_null)
    numeric_hits = sum(1 for v in non_null if parses_numeric(v))
    if numeric_hits / n >= PARSE_FRACTION:
        return "numeric"
    if all(v.strip().lower() in BOOLEAN_TOKENS for v in non_null):
        return "boolean"
    distinct = len(set(non_null))
    if distinct <= max(FREQUENCY_TABLE_CAP, 0.05 * total_rows):
        return "categorical"
    datetime_hits = sum(1 for v in non_null if parses_datetime(v))
    if datetime_hits / n >= PARSE_FRACTION:
        return "datetime"
    return "text"


def _numeric_stats(non_null: Sequence[str]) -> NumericStats:
    values = np.array(
        [float(v.strip()) for v in non_null if parses_numeric(v)], dtype=float
    )
    n = values.size
    std = float(np.std(values, ddof=1)) if n > 1 else 0.0
    q1, q2, q3 = (float(q) for q in np.percentile(values, [25, 50, 75]))
    return NumericStats(
        min=float(values.min()),
        max=float(values.max()),
        mean=float(values.mean()),
        std=std,
        q1=q1,
        q2=q2,
        q3=q3,
        count=int(n),
    )


def _categorical_stats(non_null: Sequence[str]) -> CategoricalStats:
    counts: dict[str, int] = {}
    for v in non_null:
        counts[v] = counts.get(v, 0) + 1
    ordered = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return CategoricalStats(
        distinct_count=len(counts),
        frequency_table=ordered[:FREQUENCY_TABLE_CAP],
    )


def profile_column(
    values: Sequence[str], name: str = "", total_rows: int | None = None
) -> ColumnProfile:
    """Profile one column of raw cell strings.

    ``total_rows`` anchors the 5%-of-rows categorical threshold; it defaults
    to the number of values given. Total function: never raises.
    """
    if total_rows is None:
        total_rows = len(values)
    non_null = [v for v in values if not is_null(v)]
    inferred = _infer_type(non_null, total_rows)

    samples: list[str] = []
    seen: set[str] = set()
    for v in non_null:
        if v not in seen:
            seen.add(v)
            samples.append(v)
            if len(samples) >= SAMPLE_VALUE_CAP:
                break

    return ColumnProfile(
        name=name,
        inferred_type=inferred,
        null_count=len(values) - len(non_null),
        sample_values=samples,
        numeric_stats=_numeric_stats(non_null) if inferred == "numeric" else None,
        categorical_stats=_categorical_stats(non_null)
        if inferred in ("categorical", "boolean")
        else None,
    )


def csv_rows(raw_bytes: bytes, name: str = "") -> tuple[list[str], list[list[str]]]:
    """Header and width-normalized data rows of a CSV file.

    The first row is the header. Invalid UTF-8 sequences are replaced, ragged
    rows are padded with nulls or truncated to the header width, and
    completely blank lines are skipped.

    Raises :class:`EmptyFile` when there is no header row and
    :class:`DuplicateColumn` when two header cells are identical.
    """
    text = raw_bytes.decode("utf-8", errors="replace")
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    if not rows:
        raise EmptyFile(f"{name}: no header row")
    header = rows[0]
    seen: set[str] = set()
    for col in header:
        if col in seen:
            raise DuplicateColumn(f"{name}: duplicate column {col!r}")
        seen.add(col)
    width = len(header)
    data = [row[:width] + [""] * (width - len(row)) for row in rows[1:]]
    return header, data


def ingest_csv(raw_bytes: bytes, name: str, source_ref: str | None = None) -> Dataset:
    """Parse CSV bytes into a profiled :class:`Dataset`."""
    header, data = csv_rows(raw_bytes, name)
    columns_values: list[list[str]] = [[] for _ in header]
    for row in data:
        for i, cell in enumerate(row):
            columns_values[i].append(cell)

    dataset_id = "ds-" + hashlib.sha256(
        name.encode("utf-8") + b"\x00" + raw_bytes
    ).hexdigest()[:16]
    return Dataset(
        id=dataset_id,
        name=name,
        row_count=len(data),
        columns=[
            profile_column(vals, name=col, total_rows=len(data))
            for col, vals in zip(header, columns_values)
        ],
        source_ref=source_ref if source_ref is not None else f"datasets/{dataset_id}.csv",
    )


def _summary_cell(value: str) -> str:
    if len(value) > SUMMARY_CELL_CAP:
        return value[: SUMMARY_CELL_CAP - 3] + "..."
    return value


def summarize_dataset(dataset: Dataset) -> str:
    """Plain-text block for one dataset: 3 header lines + 1 line per column."""
    lines = [f"Dataset: {dataset.name}", f"rows={dataset.row_count}", "columns:"]
    for col in dataset.columns:
        samples = ", ".join(_summary_cell(v) for v in col.sample_values)
        lines.append(
            f"{col.name} ({col.inferred_type}, nulls={col.null_count}):"
            + (f" {samples}" if samples else "")
        )
    return "\n".join(lines)


def summarize_for_llm(
    datasets: Mapping[str, Dataset] | Iterable[Dataset], selected: Sequence[str]
) -> str:
    """Summary of the selected datasets, in selection order.

    ``datasets`` maps dataset id to :class:`Dataset` (an iterable of datasets
    is keyed by id first). Raises :class:`UnknownDataset` for ids not in the
    store; ``selected`` must be non-empty.
    """
    if not isinstance(datasets, Mapping):
        datasets = {d.id: d for d in datasets}
    if not selected:
        raise UnknownDataset("no datasets selected")
    blocks = []
    for ds_id in selected:
        if ds_id not in datasets:
            raise UnknownDataset(ds_id)
        blocks.append(summarize_dataset(datasets[ds_id]))
    return "\n\n".join(blocks)
