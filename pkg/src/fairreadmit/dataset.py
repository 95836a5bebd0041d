"""Loading, cleaning and encoding of Diabetes 130-US style CSV files."""
from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
import scipy.sparse as sp

MISSING = "?"

DEFAULT_ID_COLUMNS = ("encounter_id", "patient_nbr")
DEFAULT_LABEL_COLUMN = "readmitted"
DEFAULT_NUMERIC_COLUMNS = (
    "time_in_hospital",
    "num_lab_procedures",
    "num_procedures",
    "num_medications",
    "number_outpatient",
    "number_emergency",
    "number_inpatient",
    "number_diagnoses",
)


class DatasetError(ValueError):
    """Raised for malformed input files or columns."""


class RaggedRowError(DatasetError):
    def __init__(self, row_index, n_cells, n_columns):
        self.row_index = row_index
        super().__init__(
            f"row {row_index} has {n_cells} cells, header has {n_columns} columns"
        )


@dataclass(frozen=True)
class RecordTable:
    column_names: tuple
    rows: list

    def __post_init__(self):
        names = tuple(self.column_names)
        object.__setattr__(self, "column_names", names)
        seen = set()
        for name in names:
            if name in seen:
                raise DatasetError(f"duplicate column name {name!r}")
            seen.add(name)
        for i, row in enumerate(self.rows):
            if len(row) != len(names):
                raise RaggedRowError(i, len(row), len(names))

    @property
    def n_rows(self):
        return len(self.rows)

    def column(self, name) -> list:
        try:
            j = self.column_names.index(name)
        except ValueError:
            raise DatasetError(f"missing column {name!r}") from None
        return [row[j] for row in self.rows]

    def has_column(self, name):
        return name in self.column_names

    def select_rows(self, keep: Sequence[bool]) -> "RecordTable":
        return RecordTable(self.column_names, [r for r, k in zip(self.rows, keep) if k])


def load_csv(path) -> RecordTable:
    """Parse a comma-separated UTF-8 file with a header line.

    Cells are kept as text; ``"?"`` is left untouched. Ragged rows raise
    :class:`RaggedRowError` with the zero-based data-row index.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"{path}: empty file") from None
        rows = []
        for i, row in enumerate(reader):
            if not row:
                continue
            if len(row) != len(header):
                raise RaggedRowError(i, len(row), len(header))
            rows.append(tuple(row))
    return RecordTable(tuple(header), rows)


def derive_label(table: RecordTable, column=DEFAULT_LABEL_COLUMN) -> np.ndarray:
    """1 for ``"<30"`` (readmitted within 30 days), 0 for ``">30"`` and ``"NO"``."""
    out = np.empty(table.n_rows, dtype=np.int8)
    for i, value in enumerate(table.column(column)):
        v = value.strip().upper()
        if v == "<30":
            out[i] = 1
        elif v in (">30", "NO"):
            out[i] = 0
        else:
            raise DatasetError(f"row {i}: unknown {column} value {value!r}")
    return out


_AGE_BIN = re.compile(r"^\[\s*(-?\d+(?:\.\d+)?)\s*[-,]\s*(-?\d+(?:\.\d+)?)\s*\)$")


def age_bin_midpoint(value: str) -> float:
    m = _AGE_BIN.match(value.strip())
    if m is None:
        raise DatasetError(f"unparseable age bin {value!r}")
    lo, hi = float(m.group(1)), float(m.group(2))
    return (lo + hi) / 2.0


_PREDICATE_KINDS = ("in", "not_in", "bin_midpoint_ge", "bin_midpoint_lt")


def _check_predicate(pred):
    if not isinstance(pred, dict) or len(pred) != 1:
        raise DatasetError(f"predicate must be a single-key mapping, got {pred!r}")
    (kind, arg), = pred.items()
    if kind not in _PREDICATE_KINDS:
        raise DatasetError(f"unknown predicate kind {kind!r}; expected one of {_PREDICATE_KINDS}")
    if kind in ("in", "not_in"):
        if isinstance(arg, str) or not all(isinstance(v, str) for v in arg):
            raise DatasetError(f"{kind!r} predicate needs a list of strings")
        return {kind: sorted(set(arg))}
    return {kind: float(arg)}


def _match(pred, value):
    (kind, arg), = pred.items()
    if kind == "in":
        return value in arg
    if kind == "not_in":
        return value not in arg
    mid = age_bin_midpoint(value)
    return mid >= arg if kind == "bin_midpoint_ge" else mid < arg


def _provably_disjoint(a, b):
    (ka, va), = a.items()
    (kb, vb), = b.items()
    if ka == "in" and kb == "in":
        return not set(va) & set(vb)
    if {ka, kb} == {"in", "not_in"}:
        inside, excluded = (va, vb) if ka == "in" else (vb, va)
        return set(inside) <= set(excluded)
    if ka == "bin_midpoint_ge" and kb == "bin_midpoint_lt":
        return vb <= va
    if ka == "bin_midpoint_lt" and kb == "bin_midpoint_ge":
        return va <= vb
    return False


@dataclass(frozen=True)
class GroupSpec:
    """Privileged/unprivileged split of one protected column.

    Predicates are single-key mappings: ``{"in": [...]}``, ``{"not_in": [...]}``,
    ``{"bin_midpoint_ge": t}`` or ``{"bin_midpoint_lt": t}`` (the last two parse
    ``[lo,hi)`` / ``[lo-hi)`` interval strings). Values listed in
    ``missing_values`` match neither side and are masked.
    """

    name: str
    attribute: str
    privileged: dict
    unprivileged: dict
    favorable_label: int = 0
    missing_values: tuple = (MISSING,)

    def __post_init__(self):
        object.__setattr__(self, "privileged", _check_predicate(self.privileged))
        object.__setattr__(self, "unprivileged", _check_predicate(self.unprivileged))
        object.__setattr__(self, "missing_values", tuple(self.missing_values))
        if self.favorable_label not in (0, 1):
            raise DatasetError(f"favorable_label must be 0 or 1, got {self.favorable_label!r}")
        if not _provably_disjoint(self.privileged, self.unprivileged):
            raise DatasetError(f"group spec {self.name!r}: predicates are not disjoint")

    def to_dict(self):
        return {
            "name": self.name,
            "attribute": self.attribute,
            "privileged": dict(self.privileged),
            "unprivileged": dict(self.unprivileged),
            "favorable_label": int(self.favorable_label),
            "missing_values": list(self.missing_values),
        }

    @classmethod
    def from_dict(cls, d):
        allowed = {"name", "attribute", "privileged", "unprivileged", "favorable_label", "missing_values"}
        unknown = set(d) - allowed
        if unknown:
            raise DatasetError(f"unknown group spec keys: {sorted(unknown)}")
        kwargs = dict(d)
        if "missing_values" in kwargs:
            kwargs["missing_values"] = tuple(kwargs["missing_values"])
        return cls(**kwargs)


def default_group_specs(favorable_label=0):
    return [
        GroupSpec("age", "age", {"bin_midpoint_ge": 25}, {"bin_midpoint_lt": 25}, favorable_label),
        GroupSpec("gender", "gender", {"in": ["Male"]}, {"in": ["Female"]}, favorable_label),
        GroupSpec(
            "race", "race", {"not_in": ["AfricanAmerican"]}, {"in": ["AfricanAmerican"]}, favorable_label
        ),
    ]


def binarize_protected(table: RecordTable, spec: GroupSpec):
    """Return ``(group, missing_mask)``; group is 1 privileged, 0 unprivileged."""
    values = table.column(spec.attribute)
    group = np.zeros(len(values), dtype=np.int8)
    mask = np.zeros(len(values), dtype=bool)
    cache = {}
    for i, v in enumerate(values):
        hit = cache.get(v)
        if hit is None:
            if v in spec.missing_values:
                hit = -1
            else:
                priv = _match(spec.privileged, v)
                unpriv = _match(spec.unprivileged, v)
                if priv and unpriv:
                    raise DatasetError(f"value {v!r} of {spec.attribute!r} matches both groups")
                hit = 1 if priv else (0 if unpriv else -1)
            cache[v] = hit
        if hit < 0:
            mask[i] = True
        else:
            group[i] = hit
    return group, mask


@dataclass
class EncodedDataset:
    """Numeric view of a table.

    ``X`` is a 2-D ndarray or a scipy CSR matrix (the one-hot UCI encoding is
    far too wide to hold densely). ``P`` and ``group_missing_mask`` have one
    column per entry of ``group_names``.
    """

    X: object
    y: np.ndarray
    P: np.ndarray
    w: np.ndarray
    feature_names: list
    row_ids: np.ndarray
    group_missing_mask: np.ndarray
    group_names: list = field(default_factory=list)

    def __post_init__(self):
        n = self.X.shape[0]
        self.y = np.asarray(self.y, dtype=np.int8)
        self.w = np.asarray(self.w, dtype=np.float64)
        k = len(self.group_names)
        self.P = np.asarray(self.P, dtype=np.int8).reshape(n, k)
        self.group_missing_mask = np.asarray(self.group_missing_mask, dtype=bool).reshape(n, k)
        if not (len(self.y) == len(self.w) == n == len(self.P) == len(self.row_ids)):
            raise DatasetError("X, y, w, P and row_ids must agree on the number of rows")
        if self.P.shape[1] != len(self.group_names) or self.group_missing_mask.shape != self.P.shape:
            raise DatasetError("P / group_missing_mask columns must match group_names")
        if n and not np.all(self.w > 0):
            raise DatasetError("all weights must be positive")
        if n and not np.isin(self.y, (0, 1)).all():
            raise DatasetError("labels must be binary")

    @property
    def n_rows(self):
        return self.X.shape[0]

    @property
    def n_features(self):
        return self.X.shape[1]

    def group(self, name):
        """``(group column, missing mask)`` for one protected attribute."""
        try:
            j = self.group_names.index(name)
        except ValueError:
            raise DatasetError(f"no protected column named {name!r}") from None
        return self.P[:, j], self.group_missing_mask[:, j]

    def subset(self, idx) -> "EncodedDataset":
        idx = np.asarray(idx, dtype=np.intp)
        return EncodedDataset(
            X=self.X[idx],
            y=self.y[idx],
            P=self.P[idx],
            w=self.w[idx],
            feature_names=list(self.feature_names),
            row_ids=self.row_ids[idx],
            group_missing_mask=self.group_missing_mask[idx],
            group_names=list(self.group_names),
        )

    def with_weights(self, w) -> "EncodedDataset":
        return replace(self, w=np.asarray(w, dtype=np.float64).copy())


@dataclass(frozen=True)
class EncodeConfig:
    id_columns: tuple = DEFAULT_ID_COLUMNS
    label_column: str = DEFAULT_LABEL_COLUMN
    numeric_columns: tuple = DEFAULT_NUMERIC_COLUMNS
    group_specs: tuple = tuple(default_group_specs())
    exclude_protected: bool = False
    row_id_column: str = "encounter_id"


MISSING_CATEGORY = "<missing>"


def _parse_numeric(values, name):
    out = np.empty(len(values), dtype=np.float64)
    missing = np.zeros(len(values), dtype=bool)
    for i, v in enumerate(values):
        if v == MISSING or v.strip() == "":
            missing[i] = True
            out[i] = np.nan
            continue
        try:
            out[i] = float(v)
        except ValueError:
            raise DatasetError(f"row {i}: column {name!r} is declared numeric but holds {v!r}") from None
        if not np.isfinite(out[i]):
            raise DatasetError(f"row {i}: column {name!r} holds non-finite value {v!r}")
    if missing.any():
        fill = float(np.median(out[~missing])) if (~missing).any() else 0.0
        out[missing] = fill
    return out


def encode_features(table: RecordTable, config: EncodeConfig | None = None) -> EncodedDataset:
    """One-hot nominal columns, median-impute numeric ones, attach labels and groups.

    Feature order follows the table's column order; within a nominal column the
    indicators are sorted by category text, ``"?"`` becoming ``col=<missing>``.
    """
    config = config or EncodeConfig()
    y = derive_label(table, config.label_column)
    specs = list(config.group_specs)
    n = table.n_rows
    P = np.zeros((n, len(specs)), dtype=np.int8)
    mask = np.zeros((n, len(specs)), dtype=bool)
    for k, spec in enumerate(specs):
        P[:, k], mask[:, k] = binarize_protected(table, spec)

    if config.row_id_column and table.has_column(config.row_id_column):
        raw_ids = table.column(config.row_id_column)
        try:
            row_ids = np.array([int(v) for v in raw_ids], dtype=np.int64)
        except ValueError:
            row_ids = np.array(raw_ids, dtype=object)
    else:
        row_ids = np.arange(n, dtype=np.int64)

    dropped = set(config.id_columns) | {config.label_column}
    if config.exclude_protected:
        dropped |= {s.attribute for s in specs}
    numeric = set(config.numeric_columns)
    absent = numeric - set(table.column_names)
    if absent:
        raise DatasetError(f"declared numeric columns not in file: {sorted(absent)}")

    blocks = []
    names = []
    for col in table.column_names:
        if col in dropped:
            continue
        values = table.column(col)
        if col in numeric:
            blocks.append(sp.csr_matrix(_parse_numeric(values, col).reshape(-1, 1)))
            names.append(col)
            continue
        cats, codes = np.unique(np.array(values, dtype=object), return_inverse=True)
        ind = sp.csr_matrix(
            (np.ones(n), (np.arange(n), codes.ravel())), shape=(n, len(cats)), dtype=np.float64
        )
        blocks.append(ind)
        names.extend(f"{col}={MISSING_CATEGORY if c == MISSING else c}" for c in cats)

    X = sp.hstack(blocks, format="csr") if blocks else sp.csr_matrix((n, 0))
    X.sort_indices()
    return EncodedDataset(
        X=X,
        y=y,
        P=P,
        w=np.ones(n),
        feature_names=names,
        row_ids=row_ids,
        group_missing_mask=mask,
        group_names=[s.name for s in specs],
    )


def filter_rows(table: RecordTable, column: str, excluded_values) -> RecordTable:
    """Drop rows whose ``column`` value is in ``excluded_values`` (cohort filter)."""
    excluded = set(excluded_values)
    if not excluded:
        return table
    return table.select_rows([v not in excluded for v in table.column(column)])


def split(data: EncodedDataset, test_fraction=0.3, seed=42):
    """Stratified (on y), seeded train/test partition.

    Both halves keep the original row order.
    """
    if not 0.0 <= test_fraction <= 1.0:
        raise DatasetError(f"test_fraction must be in [0, 1], got {test_fraction}")
    n = data.n_rows
    if test_fraction == 0.0:
        return data.subset(np.arange(n)), data.subset(np.arange(0))
    if test_fraction == 1.0:
        return data.subset(np.arange(0)), data.subset(np.arange(n))
    rng = np.random.default_rng(seed)
    test_idx = []
    for label in (0, 1):
        stratum = np.flatnonzero(data.y == label)
        size = len(stratum)
        if size == 0:
            continue
        if size < 2:
            raise DatasetError(f"stratum y={label} has {size} row(s); cannot fill both train and test")
        n_test = int(np.floor(test_fraction * size + 0.5))
        n_test = min(max(n_test, 1), size - 1)
        test_idx.append(rng.permutation(stratum)[:n_test])
    test_idx = np.sort(np.concatenate(test_idx)) if test_idx else np.arange(0)
    in_test = np.zeros(n, dtype=bool)
    in_test[test_idx] = True
    return data.subset(np.flatnonzero(~in_test)), data.subset(test_idx)
