"""Bug-report ingestion, canonical records, and chronological train/test splits.

Datasets arrive as CSV (RFC-4180) or JSONL exports from a Bugzilla-style
tracker.  A user-supplied column map ties the export's column names to the
canonical ``BugReport`` fields, so the rest of the pipeline never sees a
tracker-specific schema.  Training eligibility (RESOLVED + FIXED, known
priority) and the order-preserving 80/20 split live here too.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
from dataclasses import dataclass, field, fields, replace
from typing import BinaryIO, Iterable, Sequence


class Priority(enum.Enum):
    """Developer-assigned importance; P1 is the highest, P5 the lowest."""

    P1 = "P1"
    P2 = "P2"
    P3 = "P3"
    P4 = "P4"
    P5 = "P5"
    UNKNOWN = "UNKNOWN"

    @classmethod
    def parse(cls, raw: str | None) -> "Priority":
        """Map a raw priority cell to a level; anything unparseable is UNKNOWN."""
        if raw is None:
            return cls.UNKNOWN
        text = raw.strip().upper()
        if text in ("P1", "P2", "P3", "P4", "P5"):
            return cls(text)
        return cls.UNKNOWN


#: The five real levels, in tie-break order (P1 first).
PRIORITY_LEVELS: tuple[Priority, ...] = (
    Priority.P1,
    Priority.P2,
    Priority.P3,
    Priority.P4,
    Priority.P5,
)

PRIORITY_INDEX: dict[Priority, int] = {p: i for i, p in enumerate(PRIORITY_LEVELS)}


class Status(enum.Enum):
    UNCONFIRMED = "UNCONFIRMED"
    NEW = "NEW"
    ASSIGNED = "ASSIGNED"
    RESOLVED = "RESOLVED"
    VERIFIED = "VERIFIED"
    REOPEN = "REOPEN"
    CLOSED = "CLOSED"


class Resolution(enum.Enum):
    """Qualifier attached to a lifecycle status; FIXED marks a code fix."""

    FIXED = "FIXED"
    OTHER = "OTHER"
    NONE = "NONE"


#: Statuses that may legitimately carry a FIXED resolution.
_RESOLVED_LIKE = frozenset({Status.RESOLVED, Status.VERIFIED, Status.CLOSED})


def parse_status(raw: str) -> Status:
    text = raw.strip().upper().replace("-", "_")
    # tolerate the REOPENED spelling some exports use
    if text == "REOPENED":
        text = "REOPEN"
    try:
        return Status(text)
    except ValueError:
        raise ValueError(f"unrecognized status {raw!r}") from None


def parse_resolution(raw: str | None) -> Resolution:
    """Empty cells mean no resolution; any non-FIXED value collapses to OTHER."""
    if raw is None:
        return Resolution.NONE
    text = raw.strip().upper()
    if text in ("", "---", "--"):
        return Resolution.NONE
    if text == "FIXED":
        return Resolution.FIXED
    return Resolution.OTHER


@dataclass(frozen=True, slots=True)
class BugReport:
    """One canonical issue record.

    ``summary`` and ``description`` are always strings; missing text
    canonicalizes to "".  ``order_key`` is the monotone key used for
    chronological ordering (defaults to the bug id at parse time).
    """

    bug_id: int
    summary: str
    description: str
    product: str
    component: str
    status: Status
    resolution: Resolution
    priority: Priority
    order_key: int

    def __post_init__(self) -> None:
        if self.resolution is Resolution.FIXED and self.status not in _RESOLVED_LIKE:
            raise ValueError(
                f"bug {self.bug_id}: FIXED resolution requires a resolved-like "
                f"status, got {self.status.value}"
            )

    def to_record(self) -> dict:
        return {
            "bug_id": self.bug_id,
            "summary": self.summary,
            "description": self.description,
            "product": self.product,
            "component": self.component,
            "status": self.status.value,
            "resolution": self.resolution.value,
            "priority": self.priority.value,
            "order_key": self.order_key,
        }

    @classmethod
    def from_record(cls, record: dict) -> "BugReport":
        return cls(
            bug_id=int(record["bug_id"]),
            summary=str(record.get("summary", "")),
            description=str(record.get("description", "")),
            product=str(record.get("product", "")),
            component=str(record.get("component", "")),
            status=Status(record["status"]),
            resolution=Resolution(record["resolution"]),
            priority=Priority(record["priority"]),
            order_key=int(record["order_key"]),
        )


class DatasetFormat(enum.Enum):
    CSV = "csv"
    JSONL = "jsonl"


class Ordering(enum.Enum):
    BY_ORDER_KEY = "by_order_key"
    AS_GIVEN = "as_given"


@dataclass(frozen=True, slots=True)
class SplitSpec:
    train_fraction: float
    ordering: Ordering = Ordering.BY_ORDER_KEY

    def __post_init__(self) -> None:
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie in (0, 1)")


@dataclass(frozen=True, slots=True)
class ColumnMap:
    """Source column names for each canonical field.

    ``order_key`` is optional; when absent the bug id doubles as the
    chronological key (tracker ids are allocated monotonically).
    ``resolution`` may point at the status column itself for exports that
    fuse the two (e.g. "RESOLVED FIXED" in one cell is not supported; use
    separate columns).
    """

    bug_id: str = "bug_id"
    summary: str = "summary"
    description: str = "description"
    product: str = "product"
    component: str = "component"
    status: str = "status"
    resolution: str = "resolution"
    priority: str = "priority"
    order_key: str | None = None

    @classmethod
    def from_dict(cls, mapping: dict) -> "ColumnMap":
        known = {f.name for f in fields(cls)}
        unknown = set(mapping) - known
        if unknown:
            raise ValueError(f"unknown column-map keys: {sorted(unknown)}")
        return cls(**mapping)


@dataclass(frozen=True, slots=True)
class Reject:
    """One unparseable input record: line number (1-based) and the reason."""

    line: int
    reason: str

    def to_record(self) -> dict:
        return {"line": self.line, "reason": self.reason}


@dataclass(slots=True)
class ParseResult:
    reports: list[BugReport] = field(default_factory=list)
    rejects: list[Reject] = field(default_factory=list)


class DatasetError(Exception):
    """Fatal ingestion failure (unreadable stream, missing columns)."""


def _coerce_text(value) -> str:
    if value is None:
        return ""
    return str(value)


def _row_to_report(row: dict, columns: ColumnMap) -> BugReport:
    def cell(name: str):
        if name not in row:
            raise KeyError(f"missing column {name!r}")
        return row[name]

    bug_id_raw = cell(columns.bug_id)
    try:
        bug_id = int(str(bug_id_raw).strip())
    except (TypeError, ValueError):
        raise ValueError(f"bug_id {bug_id_raw!r} is not an integer") from None

    status = parse_status(_coerce_text(cell(columns.status)))
    resolution = parse_resolution(
        _coerce_text(row.get(columns.resolution)) if columns.resolution in row else None
    )
    priority = Priority.parse(_coerce_text(cell(columns.priority)))

    if columns.order_key is not None:
        raw_key = cell(columns.order_key)
        try:
            order_key = int(str(raw_key).strip())
        except (TypeError, ValueError):
            raise ValueError(f"order_key {raw_key!r} is not an integer") from None
    else:
        order_key = bug_id

    return BugReport(
        bug_id=bug_id,
        summary=_coerce_text(row.get(columns.summary)),
        description=_coerce_text(row.get(columns.description)),
        product=_coerce_text(row.get(columns.product)),
        component=_coerce_text(row.get(columns.component)),
        status=status,
        resolution=resolution,
        priority=priority,
        order_key=order_key,
    )


def parse_dataset(
    source: BinaryIO,
    fmt: DatasetFormat,
    columns: ColumnMap | None = None,
) -> ParseResult:
    """Parse a CSV or JSONL byte stream into canonical records.

    Malformed rows land in ``result.rejects`` with their 1-based line number
    and parsing continues; an unreadable stream (bad encoding, no header)
    raises :class:`DatasetError`.  Text fields are preserved verbatim and
    unparseable priorities become ``Priority.UNKNOWN``.
    """
    columns = columns or ColumnMap()
    try:
        text = io.TextIOWrapper(source, encoding="utf-8")
        if fmt is DatasetFormat.CSV:
            return _parse_csv(text, columns)
        if fmt is DatasetFormat.JSONL:
            return _parse_jsonl(text, columns)
    except UnicodeDecodeError as exc:
        raise DatasetError(f"stream is not valid UTF-8: {exc}") from exc
    raise DatasetError(f"unsupported format {fmt!r}")


def _parse_csv(text: io.TextIOWrapper, columns: ColumnMap) -> ParseResult:
    reader = csv.DictReader(text)
    if reader.fieldnames is None:
        raise DatasetError("CSV stream has no header row")
    result = ParseResult()
    # DictReader consumed line 1 as the header.
    for line_no, row in enumerate(reader, start=2):
        try:
            result.reports.append(_row_to_report(row, columns))
        except (KeyError, ValueError) as exc:
            result.rejects.append(Reject(line=line_no, reason=str(exc)))
    return result


def _parse_jsonl(text: io.TextIOWrapper, columns: ColumnMap) -> ParseResult:
    result = ParseResult()
    for line_no, line in enumerate(text, start=1):
        stripped = line.strip()
        if not stripped:
            continue
        try:
            row = json.loads(stripped)
            if not isinstance(row, dict):
                raise ValueError("record is not a JSON object")
            result.reports.append(_row_to_report(row, columns))
        except (KeyError, ValueError) as exc:
            result.rejects.append(Reject(line=line_no, reason=str(exc)))
    return result


def write_canonical_jsonl(reports: Iterable[BugReport], stream) -> None:
    """Serialize reports as canonical JSONL (sorted keys, deterministic)."""
    for report in reports:
        stream.write(json.dumps(report.to_record(), sort_keys=True) + "\n")


def read_canonical_jsonl(stream) -> list[BugReport]:
    reports = []
    for line in stream:
        if line.strip():
            reports.append(BugReport.from_record(json.loads(line)))
    return reports


def write_rejects_jsonl(rejects: Iterable[Reject], stream) -> None:
    for reject in rejects:
        stream.write(json.dumps(reject.to_record(), sort_keys=True) + "\n")


def filter_training_eligible(reports: Sequence[BugReport]) -> list[BugReport]:
    """Keep exactly the RESOLVED+FIXED reports with a known priority.

    Order is preserved and the filter is idempotent.
    """
    return [
        r
        for r in reports
        if r.status is Status.RESOLVED
        and r.resolution is Resolution.FIXED
        and r.priority is not Priority.UNKNOWN
    ]


def filter_order_key_range(
    reports: Sequence[BugReport],
    min_key: int | None = None,
    max_key: int | None = None,
) -> list[BugReport]:
    """Optional ingestion-side window on the chronological key; off by default."""
    out = []
    for r in reports:
        if min_key is not None and r.order_key < min_key:
            continue
        if max_key is not None and r.order_key > max_key:
            continue
        out.append(r)
    return out


def chronological_split(
    reports: Sequence[BugReport], spec: SplitSpec
) -> tuple[list[BugReport], list[BugReport]]:
    """Order-preserving train/test partition with no shuffling.

    Under BY_ORDER_KEY the reports are stable-sorted by ``order_key`` first,
    so every test key is >= every train key.  The train partition takes
    ``floor(train_fraction * N)`` records, i.e. the test side rounds up:
    an 85,156-record corpus at 0.8 splits 68,124 / 17,032.
    """
    n = len(reports)
    if n < 2:
        raise ValueError("cannot split fewer than 2 reports")
    ordered = list(reports)
    if spec.ordering is Ordering.BY_ORDER_KEY:
        ordered.sort(key=lambda r: r.order_key)
    # epsilon guards float error when fraction * n is mathematically integral
    train_n = math.floor(spec.train_fraction * n + 1e-9)
    train_n = min(max(train_n, 1), n - 1)
    return ordered[:train_n], ordered[train_n:]


def relabel_order_key(report: BugReport, order_key: int) -> BugReport:
    return replace(report, order_key=order_key)
