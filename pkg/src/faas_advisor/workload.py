"""Building workload profiles from scenarios and table metadata.

Volumes come from metadata only: rows per scale factor times the mean
stored bytes per tuple of each column read.  Selectivities and exchanged
fractions are inputs; nothing here touches actual data.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .costmodel import WorkloadProfile

BYTES_PER_MIB = 1024 * 1024


class WorkloadError(ValueError):
    pass


class CandidateWorkersWarning(UserWarning):
    pass


def scan_workload(total_input: float, columns: int, partitions: int) -> WorkloadProfile:
    """Workers read their partitions and return a tiny result; no exchange."""
    return WorkloadProfile(
        total_input=total_input,
        input_columns=columns,
        input_partitions=partitions,
        process_bound=False,
    )


def exchange_workload(
    total_input: float,
    columns: int,
    partitions: int,
    exchanged_fraction: float,
    unique_key_fraction: float = 1.0,
) -> WorkloadProfile:
    """Read, then repartition ``exchanged_fraction`` of the input by key (process bound)."""
    if not 0.0 <= exchanged_fraction <= 1.0:
        raise WorkloadError("exchanged_fraction must be in [0, 1]")
    return WorkloadProfile(
        total_input=total_input,
        input_columns=columns,
        input_partitions=partitions,
        total_exchanged=exchanged_fraction * total_input,
        exchange_columns=columns,
        process_bound=True,
        unique_key_fraction=unique_key_fraction,
    )


@dataclass(frozen=True)
class TableSpec:
    name: str
    rows_per_sf: float
    columns: Mapping[str, float]  # column -> mean stored bytes per tuple
    partitions: Mapping[float, int] = field(default_factory=dict)  # SF -> partition count

    def __post_init__(self) -> None:
        if self.rows_per_sf <= 0:
            raise WorkloadError(f"{self.name}: rows_per_sf must be positive")
        for col, width in self.columns.items():
            if width <= 0:
                raise WorkloadError(f"{self.name}.{col}: bytes_per_tuple must be positive")

    def column_mib(self, column: str, sf: float) -> float:
        try:
            width = self.columns[column]
        except KeyError:
            raise WorkloadError(f"unknown column {self.name}.{column}") from None
        return sf * self.rows_per_sf * width / BYTES_PER_MIB


@dataclass(frozen=True)
class ScanSpec:
    table: str
    columns: tuple[str, ...]
    selectivity: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "columns", tuple(self.columns))
        if not 0.0 <= self.selectivity <= 1.0:
            raise WorkloadError(f"selectivity of {self.table} must be in [0, 1]")


@dataclass(frozen=True)
class QuerySpec:
    scans: tuple[ScanSpec, ...]
    exchanged_fraction: float = 0.0
    exchange_columns: int = 1
    output_mib: float = 0.0
    process_bound: bool = True
    unique_key_fraction: float = 0.0
    process_rate_scale: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "scans", tuple(self.scans))
        if not 0.0 <= self.exchanged_fraction <= 1.0:
            raise WorkloadError("exchanged fraction must be in [0, 1]")
        if not 0.0 <= self.unique_key_fraction <= 1.0:
            raise WorkloadError("unique_key_fraction must be in [0, 1]")


@dataclass(frozen=True)
class DatasetLayout:
    """Scale factor, partitions per table (an int applies to every table), and the F list."""

    sf: float
    partitions: int | Mapping[str, int] | None = None
    f_list: tuple[int, ...] = (1, 2, 3, 4, 8, 16, 32)

    def __post_init__(self) -> None:
        object.__setattr__(self, "f_list", tuple(self.f_list))
        if self.sf < 0:
            raise WorkloadError("scale factor must be non-negative")
        counts = (
            self.partitions.values() if isinstance(self.partitions, Mapping)
            else [] if self.partitions is None else [self.partitions]
        )
        if any(int(p) != p or p < 1 for p in counts):
            raise WorkloadError("partition counts must be positive integers")

    def partitions_of(self, table: TableSpec) -> int:
        if isinstance(self.partitions, Mapping):
            if table.name in self.partitions:
                return int(self.partitions[table.name])
        elif self.partitions is not None:
            return int(self.partitions)
        for sf, count in table.partitions.items():
            if float(sf) == float(self.sf):
                return int(count)
        raise WorkloadError(f"no partition count for {table.name} at SF={self.sf}")


def _table_index(tables: Iterable[TableSpec]) -> dict[str, TableSpec]:
    return {t.name.lower(): t for t in tables}


def partition_read_mib(table: TableSpec, column: str, layout: DatasetLayout) -> float:
    """MiB fetched for ``column`` from one partition of ``table``."""
    return table.column_mib(column, layout.sf) / layout.partitions_of(table)


def tpch_profile(
    query: QuerySpec, layout: DatasetLayout, tables: Sequence[TableSpec]
) -> WorkloadProfile:
    """Data-flow volumes of a query from column widths and selectivities."""
    index = _table_index(tables)
    total_input = 0.0
    total_exchanged = 0.0
    n_columns = 0
    partition_counts = set()
    for scan in query.scans:
        table = index.get(scan.table.lower())
        if table is None:
            raise WorkloadError(f"unknown table {scan.table}")
        volume = sum(table.column_mib(c, layout.sf) for c in scan.columns)
        total_input += volume
        total_exchanged += scan.selectivity * query.exchanged_fraction * volume
        n_columns += len(scan.columns)
        partition_counts.add(layout.partitions_of(table))
    if len(partition_counts) > 1:
        raise WorkloadError(
            f"scanned tables have different partition counts {sorted(partition_counts)}"
        )
    partitions = partition_counts.pop() if partition_counts else 1
    return WorkloadProfile(
        total_input=total_input,
        input_columns=n_columns,
        input_partitions=partitions,
        total_exchanged=total_exchanged,
        exchange_columns=query.exchange_columns,
        total_output=query.output_mib,
        process_bound=query.process_bound,
        unique_key_fraction=query.unique_key_fraction,
        process_rate_scale=query.process_rate_scale,
    )


def _balance(w: int) -> float:
    """(X + Y) / (2 sqrt(W)) for the most balanced factorization; 1.0 is a perfect square."""
    x = math.isqrt(w)
    while w % x:
        x -= 1
    return (x + w // x) / (2 * math.sqrt(w))


def well_factorable(w: int, threshold: int = 32, tolerance: float = 0.025) -> int:
    """Smallest worker count >= ``w`` whose two-level exchange groups are nearly balanced."""
    if w <= threshold:
        return w
    while _balance(w) > 1 + tolerance:
        w += 1
    return w


def candidate_workers(
    partitions: int,
    f_list: Iterable[int],
    adjust_for_exchange: bool = False,
    threshold: int = 32,
) -> list[int]:
    """Worker counts ``partitions / F``, in increasing F order.

    Non-divisors are skipped unless ``adjust_for_exchange`` is set, in which
    case ``ceil(partitions / F)`` is raised to a well-factorable count.
    """
    out: list[int] = []
    for f in sorted(set(f_list)):
        if f < 1:
            raise WorkloadError("partitions per worker must be >= 1")
        if adjust_for_exchange:
            base = -(-partitions // f)
            w = well_factorable(base, threshold)
            if w != partitions / f:
                warnings.warn(
                    f"F={f}: using W={w} instead of {partitions / f:g}",
                    CandidateWorkersWarning,
                    stacklevel=2,
                )
        else:
            if partitions % f:
                warnings.warn(
                    f"F={f} does not divide {partitions} partitions; skipped",
                    CandidateWorkersWarning,
                    stacklevel=2,
                )
                continue
            w = partitions // f
        if out and w >= out[-1]:
            continue
        out.append(w)
    return out


# --- files ------------------------------------------------------------------


def tables_from_list(raw: Iterable[Mapping[str, Any]]) -> list[TableSpec]:
    tables = []
    for t in raw:
        parts = t.get("partitions", {})
        if isinstance(parts, Mapping):
            parts = {float(k): int(v) for k, v in parts.items()}
        else:
            raise WorkloadError(f"{t.get('name')}: partitions must map SF to a count")
        tables.append(
            TableSpec(
                name=t["name"],
                rows_per_sf=float(t["rows_per_sf"]),
                columns={c["name"]: float(c["bytes_per_tuple"]) for c in t.get("columns", [])},
                partitions=parts,
            )
        )
    return tables


def default_tables() -> list[TableSpec]:
    """Shipped table metadata (only the measured LINEITEM column)."""
    text = resources.files("faas_advisor").joinpath("data/tpch_tables.json").read_text()
    return tables_from_list(json.loads(text)["tables"])


@dataclass(frozen=True)
class WorkloadDocument:
    profile: WorkloadProfile
    layout: DatasetLayout | None = None


_PROFILE_KEYS = {
    "total_input_mib": "total_input",
    "input_columns": "input_columns",
    "input_partitions": "input_partitions",
    "total_exchanged_mib": "total_exchanged",
    "exchange_columns": "exchange_columns",
    "total_output_mib": "total_output",
    "process_bound": "process_bound",
    "unique_key_fraction": "unique_key_fraction",
    "process_rate_scale": "process_rate_scale",
}


def workload_from_dict(doc: Mapping[str, Any]) -> WorkloadDocument:
    """Parse a workload document.

    Either ``profile`` (volumes given directly) or ``query`` + ``layout``
    (+ optional ``tables``, merged over the shipped metadata).
    """
    allowed = {"profile", "tables", "query", "layout", "_comment"}
    unknown = set(doc) - allowed
    if unknown:
        raise WorkloadError(f"unknown key(s) in workload: {sorted(unknown)}")

    layout = None
    if "layout" in doc:
        lay = doc["layout"]
        layout = DatasetLayout(
            sf=float(lay["sf"]),
            partitions=lay.get("partitions"),
            f_list=tuple(lay.get("f_list", (1, 2, 3, 4, 8, 16, 32))),
        )

    if "profile" in doc:
        if "query" in doc:
            raise WorkloadError("give either 'profile' or 'query', not both")
        raw = doc["profile"]
        unknown = set(raw) - set(_PROFILE_KEYS)
        if unknown:
            raise WorkloadError(f"unknown key(s) in profile: {sorted(unknown)}")
        kwargs = {_PROFILE_KEYS[k]: v for k, v in raw.items()}
        try:
            profile = WorkloadProfile(**kwargs)
        except ValueError as exc:
            raise WorkloadError(str(exc)) from None
        return WorkloadDocument(profile, layout)

    if "query" not in doc or layout is None:
        raise WorkloadError("workload needs 'profile', or both 'query' and 'layout'")
    index = _table_index(default_tables())
    index.update(_table_index(tables_from_list(doc.get("tables", []))))
    q = doc["query"]
    exchange = q.get("exchange", {}) or {}
    query = QuerySpec(
        scans=tuple(
            ScanSpec(s["table"], tuple(s["columns"]), float(s.get("selectivity", 1.0)))
            for s in q.get("scans", [])
        ),
        exchanged_fraction=float(exchange.get("fraction", 0.0)),
        exchange_columns=int(exchange.get("columns", 1)),
        output_mib=float(q.get("output_mib", 0.0)),
        process_bound=bool(q.get("process_bound", True)),
        unique_key_fraction=float(q.get("unique_key_fraction", 0.0)),
        process_rate_scale=float(q.get("process_rate_scale", 1.0)),
    )
    return WorkloadDocument(tpch_profile(query, layout, list(index.values())), layout)


def load_workload(source: str | Path | Mapping[str, Any]) -> WorkloadDocument:
    if isinstance(source, Mapping):
        return workload_from_dict(source)
    try:
        doc = json.loads(Path(source).read_text())
    except json.JSONDecodeError as exc:
        raise WorkloadError(f"workload is not valid JSON: {exc}") from None
    return workload_from_dict(doc)
