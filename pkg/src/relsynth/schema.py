"""Relational schema and data model.

A database schema is a set of tables, each with exactly one primary-key
column, zero or more foreign-key columns, and zero or more attribute
columns (numerical, categorical, or datetime).  Foreign keys induce the
link relation (child_table, fk_column, parent_table) used everywhere else.

Data is loaded from one CSV file per table and validated for referential
integrity; datetime attributes are parsed to epoch seconds and treated as
numerical from then on.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import NamedTuple

import numpy as np

KIND_NUMERICAL = "numerical"
KIND_CATEGORICAL = "categorical"
KIND_DATETIME = "datetime"
COLUMN_KINDS = (KIND_NUMERICAL, KIND_CATEGORICAL, KIND_DATETIME)

ROLE_PRIMARY = "primary_key"
ROLE_FOREIGN = "foreign_key"
ROLE_ATTRIBUTE = "attribute"
COLUMN_ROLES = (ROLE_PRIMARY, ROLE_FOREIGN, ROLE_ATTRIBUTE)


class SchemaError(ValueError):
    """Invalid schema structure (bad descriptor, dangling references, ...)."""


class DataError(ValueError):
    """Invalid data (parse failures, integrity violations, ...)."""


class Link(NamedTuple):
    """One foreign-key relation: child rows reference parent rows."""

    child: str
    fk_column: str
    parent: str

    @property
    def label(self) -> str:
        return f"{self.child}.{self.fk_column}->{self.parent}"


@dataclass(frozen=True)
class ColumnSpec:
    name: str
    kind: str
    role: str
    target_table: str | None = None

    def __post_init__(self):
        if self.kind not in COLUMN_KINDS:
            raise SchemaError(f"column {self.name!r}: unknown kind {self.kind!r}")
        if self.role not in COLUMN_ROLES:
            raise SchemaError(f"column {self.name!r}: unknown role {self.role!r}")
        if self.role == ROLE_FOREIGN and not self.target_table:
            raise SchemaError(f"foreign-key column {self.name!r} needs a target_table")
        if self.role != ROLE_FOREIGN and self.target_table is not None:
            raise SchemaError(f"column {self.name!r}: target_table is only valid on foreign keys")


@dataclass(frozen=True)
class TableSchema:
    name: str
    columns: tuple[ColumnSpec, ...]

    def __post_init__(self):
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            dup = sorted({n for n in names if names.count(n) > 1})
            raise SchemaError(f"table {self.name!r}: duplicate column names {dup}")
        pks = [c for c in self.columns if c.role == ROLE_PRIMARY]
        if len(pks) != 1:
            raise SchemaError(
                f"table {self.name!r}: expected exactly one primary-key column, found {len(pks)}"
                + ("; composite primary keys are unsupported" if len(pks) > 1 else "")
            )

    @property
    def primary_key(self) -> ColumnSpec:
        return next(c for c in self.columns if c.role == ROLE_PRIMARY)

    @property
    def foreign_keys(self) -> tuple[ColumnSpec, ...]:
        return tuple(c for c in self.columns if c.role == ROLE_FOREIGN)

    @property
    def attributes(self) -> tuple[ColumnSpec, ...]:
        return tuple(c for c in self.columns if c.role == ROLE_ATTRIBUTE)


@dataclass(frozen=True)
class DatabaseSchema:
    tables: tuple[TableSchema, ...]

    def __post_init__(self):
        names = [t.name for t in self.tables]
        if len(set(names)) != len(names):
            raise SchemaError("duplicate table names in schema")
        by_name = {t.name: t for t in self.tables}
        for t in self.tables:
            for fk in t.foreign_keys:
                if fk.target_table == t.name:
                    raise SchemaError(
                        f"table {t.name!r}, column {fk.name!r}: "
                        "self-referential schemas unsupported"
                    )
                if fk.target_table not in by_name:
                    raise SchemaError(
                        f"table {t.name!r}, column {fk.name!r}: "
                        f"foreign key targets missing table {fk.target_table!r}"
                    )

    def table(self, name: str) -> TableSchema:
        for t in self.tables:
            if t.name == name:
                return t
        raise KeyError(name)

    @property
    def table_names(self) -> tuple[str, ...]:
        return tuple(t.name for t in self.tables)

    @property
    def links(self) -> tuple[Link, ...]:
        """All (child, fk_column, parent) triples, in schema declaration order."""
        out = []
        for t in self.tables:
            for fk in t.foreign_keys:
                out.append(Link(t.name, fk.name, fk.target_table))
        return tuple(out)

    def to_json_dict(self) -> dict:
        return {
            "tables": [
                {
                    "name": t.name,
                    "columns": [
                        {
                            "name": c.name,
                            "kind": c.kind,
                            "role": c.role,
                            **({"target_table": c.target_table} if c.target_table else {}),
                        }
                        for c in t.columns
                    ],
                }
                for t in self.tables
            ]
        }


@dataclass
class Table:
    """Row storage for one table.

    Keys are kept as python objects (ints or strings); numerical and datetime
    attributes are float64 arrays (datetime as epoch seconds), categorical
    attributes are object arrays of strings.
    """

    name: str
    pks: np.ndarray
    fks: dict[str, np.ndarray] = field(default_factory=dict)
    attrs: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def n_rows(self) -> int:
        return len(self.pks)


@dataclass
class Database:
    schema: DatabaseSchema
    tables: dict[str, Table]

    def validate(self) -> None:
        """Check all Database invariants; raise DataError on the first violation."""
        for ts in self.schema.tables:
            if ts.name not in self.tables:
                raise DataError(f"missing table {ts.name!r}")
            t = self.tables[ts.name]
            if len(set(t.pks.tolist())) != t.n_rows:
                raise DataError(f"table {ts.name!r}: duplicate primary key values")
            for fk in ts.foreign_keys:
                if fk.name not in t.fks or len(t.fks[fk.name]) != t.n_rows:
                    raise DataError(f"table {ts.name!r}: foreign-key column {fk.name!r} missing or wrong length")
            for a in ts.attributes:
                if a.name not in t.attrs or len(t.attrs[a.name]) != t.n_rows:
                    raise DataError(f"table {ts.name!r}: attribute column {a.name!r} missing or wrong length")
        # referential integrity, checked child by child with row indices
        pk_sets = {name: set(t.pks.tolist()) for name, t in self.tables.items()}
        for child, fk_col, parent in self.schema.links:
            values = self.tables[child].fks[fk_col]
            parent_pks = pk_sets[parent]
            for i, v in enumerate(values.tolist()):
                if v not in parent_pks:
                    raise DataError(
                        f"table {child!r} row {i}: foreign key {fk_col}={v!r} "
                        f"references no row in {parent!r}"
                    )


def _parse_key(text: str):
    """Keys are integers when they look like integers, strings otherwise."""
    try:
        return int(text)
    except ValueError:
        return text


def _parse_datetime(text: str, where: str) -> float:
    try:
        dt = datetime.fromisoformat(text)
    except ValueError as exc:
        raise DataError(f"{where}: invalid ISO-8601 datetime {text!r}") from exc
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.timestamp()


def load_schema(path: str | Path) -> DatabaseSchema:
    """Load and validate a schema descriptor (JSON, see README for the format)."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise SchemaError(f"cannot read schema file {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict) or "tables" not in doc:
        raise SchemaError(f"{path}: descriptor must be an object with a 'tables' list")
    tables = []
    for tdoc in doc["tables"]:
        try:
            cols = tuple(
                ColumnSpec(
                    name=c["name"],
                    kind=c["kind"],
                    role=c["role"],
                    target_table=c.get("target_table"),
                )
                for c in tdoc["columns"]
            )
            tables.append(TableSchema(name=tdoc["name"], columns=cols))
        except KeyError as exc:
            raise SchemaError(f"{path}: table descriptor missing field {exc}") from exc
    return DatabaseSchema(tables=tuple(tables))


def load_database(schema: DatabaseSchema, data_dir: str | Path) -> Database:
    """Load one CSV per table from data_dir and validate the result.

    Headers must contain exactly the schema's column names (any order).
    Empty cells are rejected: missing values are out of scope.
    """
    data_dir = Path(data_dir)
    tables: dict[str, Table] = {}
    for ts in schema.tables:
        path = data_dir / f"{ts.name}.csv"
        if not path.exists():
            raise DataError(f"missing data file {path}")
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise DataError(f"{path}: empty file") from None
            expected = [c.name for c in ts.columns]
            if sorted(header) != sorted(expected):
                raise DataError(
                    f"{path}: header mismatch; expected columns {expected}, found {header}"
                )
            col_pos = {name: header.index(name) for name in expected}
            raw_rows = list(reader)

        pks = []
        fks: dict[str, list] = {c.name: [] for c in ts.foreign_keys}
        attrs: dict[str, list] = {c.name: [] for c in ts.attributes}
        for i, row in enumerate(raw_rows):
            if len(row) != len(header):
                raise DataError(f"{path} row {i}: expected {len(header)} fields, found {len(row)}")
            for c in ts.columns:
                cell = row[col_pos[c.name]]
                where = f"{path} row {i}, column {c.name!r}"
                if cell == "":
                    raise DataError(f"{where}: empty cells are not supported")
                if c.role in (ROLE_PRIMARY, ROLE_FOREIGN):
                    value = _parse_key(cell)
                    (pks if c.role == ROLE_PRIMARY else fks[c.name]).append(value)
                elif c.kind == KIND_CATEGORICAL:
                    attrs[c.name].append(cell)
                elif c.kind == KIND_DATETIME:
                    attrs[c.name].append(_parse_datetime(cell, where))
                else:
                    try:
                        attrs[c.name].append(float(cell))
                    except ValueError as exc:
                        raise DataError(f"{where}: invalid numerical value {cell!r}") from exc

        seen = set()
        for i, pk in enumerate(pks):
            if pk in seen:
                raise DataError(f"{path} row {i}: duplicate primary key {pk!r}")
            seen.add(pk)
        tables[ts.name] = Table(
            name=ts.name,
            pks=np.array(pks, dtype=object),
            fks={name: np.array(vals, dtype=object) for name, vals in fks.items()},
            attrs={
                c.name: (
                    np.array(attrs[c.name], dtype=object)
                    if c.kind == KIND_CATEGORICAL
                    else np.array(attrs[c.name], dtype=np.float64)
                )
                for c in ts.attributes
            },
        )

    db = Database(schema=schema, tables=tables)
    db.validate()
    return db


def _format_cell(value, kind: str) -> str:
    if kind == KIND_DATETIME:
        # Synthetic values are projected to whole seconds.
        dt = datetime.fromtimestamp(int(round(float(value))), tz=timezone.utc)
        return dt.isoformat()
    if kind == KIND_NUMERICAL:
        f = float(value)
        return str(int(f)) if f.is_integer() else repr(f)
    return str(value)


def export_database(db: Database, out_dir: str | Path) -> None:
    """Write one <table>.csv per table; inverse of load_database on row values."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for ts in db.schema.tables:
        t = db.tables[ts.name]
        with open(out_dir / f"{ts.name}.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow([c.name for c in ts.columns])
            for i in range(t.n_rows):
                row = []
                for c in ts.columns:
                    if c.role == ROLE_PRIMARY:
                        row.append(str(t.pks[i]))
                    elif c.role == ROLE_FOREIGN:
                        row.append(str(t.fks[c.name][i]))
                    else:
                        row.append(_format_cell(t.attrs[c.name][i], c.kind))
                writer.writerow(row)


def root_tables(schema: DatabaseSchema) -> set[str]:
    """Tables with no foreign-key columns (where structure generation starts)."""
    return {t.name for t in schema.tables if not t.foreign_keys}
