"""Invertible maps between table attributes and the diffusion's continuous space.

Every attribute column becomes one real-valued dimension:

* categorical columns are label-encoded (category -> integer code by first
  appearance) and the codes standardized, so all dimensions share roughly
  unit scale;
* numerical columns with >= 20 distinct values go through a piecewise-linear
  quantile map onto a standard normal; lower-cardinality columns are
  z-scored.  Both are realized as interpolation through the observed values,
  which makes decode(encode(x)) exact for every training value.

Decoding is total on finite inputs: categorical dimensions are clamped to the
code range and rounded, numerical dimensions are clamped to the observed
value range.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from relsynth.schema import (
    KIND_CATEGORICAL,
    Database,
    DataError,
    TableSchema,
)

QUANTILE_MIN_DISTINCT = 20


def _round_half_up(x: np.ndarray) -> np.ndarray:
    return np.floor(x + 0.5)


@dataclass
class CategoricalCodec:
    """Label encoding plus standardization of the codes."""

    categories: tuple
    mean: float
    std: float

    @classmethod
    def fit(cls, values: np.ndarray) -> "CategoricalCodec":
        seen: dict = {}
        for v in values.tolist():
            if v not in seen:
                seen[v] = len(seen)
        categories = tuple(seen.keys())
        codes = np.array([seen[v] for v in values.tolist()], dtype=np.float64)
        std = float(codes.std()) if len(codes) else 0.0
        if std == 0.0:
            return cls(categories=categories, mean=float(codes.mean()) if len(codes) else 0.0, std=1.0)
        return cls(categories=categories, mean=float(codes.mean()), std=std)

    @property
    def n_categories(self) -> int:
        return len(self.categories)

    def encode(self, values: np.ndarray) -> np.ndarray:
        index = {c: i for i, c in enumerate(self.categories)}
        out = np.empty(len(values), dtype=np.float64)
        for i, v in enumerate(values.tolist()):
            if v not in index:
                raise DataError(f"unknown category {v!r}")
            out[i] = index[v]
        return (out - self.mean) / self.std

    def decode(self, encoded: np.ndarray) -> np.ndarray:
        if self.n_categories == 0:
            raise DataError("cannot decode with an empty categorical codec")
        codes = encoded * self.std + self.mean
        codes = np.clip(_round_half_up(codes), 0, self.n_categories - 1).astype(np.int64)
        cats = np.array(self.categories, dtype=object)
        return cats[codes]

    def to_json_dict(self) -> dict:
        return {
            "type": "categorical",
            "categories": list(self.categories),
            "mean": self.mean,
            "std": self.std,
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "CategoricalCodec":
        return cls(categories=tuple(doc["categories"]), mean=doc["mean"], std=doc["std"])


@dataclass
class NumericalCodec:
    """Monotone piecewise-linear transform through the observed values.

    kind "quantile": knots are (unique value, inverse-normal of its midrank
    probability); kind "zscore": knots are (unique value, z-score); kind
    "constant": a single observed value c, encoded as x - c and decoded to c;
    kind "identity": pass-through (zero-row tables).
    """

    kind: str
    x_knots: np.ndarray
    y_knots: np.ndarray
    constant: float = 0.0

    @classmethod
    def fit(cls, values: np.ndarray) -> "NumericalCodec":
        values = np.asarray(values, dtype=np.float64)
        if len(values) == 0:
            return cls(kind="identity", x_knots=np.empty(0), y_knots=np.empty(0))
        if not np.all(np.isfinite(values)):
            raise DataError("non-finite numerical value in training data")
        uniq, counts = np.unique(values, return_counts=True)
        if len(uniq) == 1:
            return cls(
                kind="constant",
                x_knots=np.empty(0),
                y_knots=np.empty(0),
                constant=float(uniq[0]),
            )
        n = len(values)
        if len(uniq) >= QUANTILE_MIN_DISTINCT:
            cumulative = np.cumsum(counts)
            midrank = (cumulative - 0.5 * counts) / n
            return cls(kind="quantile", x_knots=uniq, y_knots=ndtri(midrank))
        mean = float(values.mean())
        std = float(values.std())
        return cls(kind="zscore", x_knots=uniq, y_knots=(uniq - mean) / std)

    def encode(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=np.float64)
        if self.kind == "identity":
            return values.copy()
        if self.kind == "constant":
            return values - self.constant
        return np.interp(values, self.x_knots, self.y_knots)

    def decode(self, encoded: np.ndarray) -> np.ndarray:
        encoded = np.asarray(encoded, dtype=np.float64)
        if self.kind == "identity":
            return encoded.copy()
        if self.kind == "constant":
            return np.full(len(encoded), self.constant)
        return np.interp(encoded, self.y_knots, self.x_knots)

    def to_json_dict(self) -> dict:
        return {
            "type": "numerical",
            "kind": self.kind,
            "x_knots": self.x_knots.tolist(),
            "y_knots": self.y_knots.tolist(),
            "constant": self.constant,
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "NumericalCodec":
        return cls(
            kind=doc["kind"],
            x_knots=np.array(doc["x_knots"], dtype=np.float64),
            y_knots=np.array(doc["y_knots"], dtype=np.float64),
            constant=doc["constant"],
        )


@dataclass
class TableCodec:
    """Per-attribute-column codecs, in schema order."""

    table: str
    columns: tuple[str, ...]
    codecs: tuple

    @property
    def dim(self) -> int:
        return len(self.columns)

    def encode_rows(self, attrs: dict[str, np.ndarray], n_rows: int) -> np.ndarray:
        out = np.empty((n_rows, self.dim), dtype=np.float64)
        for j, (name, codec) in enumerate(zip(self.columns, self.codecs)):
            out[:, j] = codec.encode(attrs[name])
        return out

    def decode_rows(self, encoded: np.ndarray) -> dict[str, np.ndarray]:
        if encoded.ndim != 2 or encoded.shape[1] != self.dim:
            raise DataError(
                f"table {self.table!r}: expected encoded shape (*, {self.dim}), got {encoded.shape}"
            )
        return {
            name: codec.decode(encoded[:, j])
            for j, (name, codec) in enumerate(zip(self.columns, self.codecs))
        }

    def to_json_dict(self) -> dict:
        return {
            "table": self.table,
            "columns": list(self.columns),
            "codecs": [c.to_json_dict() for c in self.codecs],
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "TableCodec":
        codecs = tuple(
            CategoricalCodec.from_json_dict(c)
            if c["type"] == "categorical"
            else NumericalCodec.from_json_dict(c)
            for c in doc["codecs"]
        )
        return cls(table=doc["table"], columns=tuple(doc["columns"]), codecs=codecs)


def _fit_table_codec(ts: TableSchema, attrs: dict[str, np.ndarray]) -> TableCodec:
    codecs = []
    for col in ts.attributes:
        values = attrs[col.name]
        if col.kind == KIND_CATEGORICAL:
            codecs.append(CategoricalCodec.fit(values))
        else:
            codecs.append(NumericalCodec.fit(values))
    return TableCodec(
        table=ts.name,
        columns=tuple(c.name for c in ts.attributes),
        codecs=tuple(codecs),
    )


def fit_codecs(db: Database) -> dict[str, TableCodec]:
    """Fit one TableCodec per table from the training database."""
    return {
        ts.name: _fit_table_codec(ts, db.tables[ts.name].attrs)
        for ts in db.schema.tables
    }


def encode_features(db: Database, codecs: dict[str, TableCodec]) -> dict[str, np.ndarray]:
    """Per-table (n_rows, n_attribute_columns) float matrices."""
    return {
        name: codecs[name].encode_rows(db.tables[name].attrs, db.tables[name].n_rows)
        for name in db.schema.table_names
    }


def decode_features(encoded: np.ndarray, table_codec: TableCodec) -> dict[str, np.ndarray]:
    """Invert encode_features for one table; total on finite inputs."""
    return table_codec.decode_rows(np.asarray(encoded, dtype=np.float64))
