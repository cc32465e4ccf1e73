"""Tabular data model: attribute descriptors, datasets, file IO, discretisation."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

NOMINAL = "nominal"
NUMERIC = "numeric"


class DataError(ValueError):
    """Raised for malformed files, schema violations and bad cell values."""


class ConfigError(ValueError):
    """Raised for out-of-range or inconsistent parameters."""


@dataclass(frozen=True)
class AttributeDescriptor:
    """One column of a dataset: a named nominal or numeric attribute."""

    name: str
    index: int
    kind: str
    values: tuple[str, ...] | None = None  # nominal domain, in declaration order
    lo: float = math.nan  # numeric: observed minimum
    hi: float = math.nan  # numeric: observed maximum

    def __post_init__(self):
        if self.kind not in (NOMINAL, NUMERIC):
            raise DataError(f"unknown attribute kind {self.kind!r}")
        if self.kind == NOMINAL:
            if not self.values:
                raise DataError(f"nominal attribute {self.name!r} has an empty domain")
            if len(set(self.values)) != len(self.values):
                raise DataError(f"nominal attribute {self.name!r} has duplicate values")
        elif not math.isnan(self.lo) and not math.isnan(self.hi) and self.lo > self.hi:
            raise DataError(f"numeric attribute {self.name!r} has min > max")

    @property
    def is_nominal(self) -> bool:
        return self.kind == NOMINAL

    @property
    def domain_size(self) -> int:
        return len(self.values) if self.values else 0


@dataclass(frozen=True)
class Dataset:
    """Immutable n x m value matrix plus class labels.

    Nominal cells store the index into the descriptor's value list; numeric
    cells store the raw real. Both live in one float64 matrix.
    """

    attributes: tuple[AttributeDescriptor, ...]
    class_attr: AttributeDescriptor
    values: np.ndarray  # (n, m) float64
    labels: np.ndarray  # (n,) int64
    relation: str = "data"

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        labs = np.asarray(self.labels, dtype=np.int64)
        if vals.ndim != 2 or vals.shape[0] == 0 or vals.shape[1] == 0:
            raise DataError("dataset needs at least one row and one column")
        if vals.shape[1] != len(self.attributes):
            raise DataError("value matrix width does not match attribute count")
        if labs.shape != (vals.shape[0],):
            raise DataError("label vector length does not match row count")
        if not self.class_attr.is_nominal:
            raise DataError("class attribute must be nominal")
        if labs.min(initial=0) < 0 or labs.max(initial=0) >= self.class_attr.domain_size:
            raise DataError("label index outside class domain")
        for a in self.attributes:
            if a.is_nominal:
                col = vals[:, a.index]
                if ((col < 0) | (col >= a.domain_size) | (col != np.floor(col))).any():
                    raise DataError(f"nominal column {a.name!r} holds an invalid value index")
        vals.setflags(write=False)
        labs.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "labels", labs)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def m(self) -> int:
        return self.values.shape[1]

    @property
    def n_classes(self) -> int:
        return self.class_attr.domain_size

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_classes)

    def attribute_names(self) -> list[str]:
        return [a.name for a in self.attributes]

    def subset(self, rows) -> "Dataset":
        """New dataset with the given rows, sharing all descriptors."""
        rows = np.asarray(rows)
        return Dataset(self.attributes, self.class_attr, self.values[rows].copy(),
                       self.labels[rows].copy(), self.relation)

    def decoded_cell(self, i: int, j: int) -> str:
        a = self.attributes[j]
        if a.is_nominal:
            return a.values[int(self.values[i, j])]
        return repr(float(self.values[i, j]))

    def schema_fingerprint(self) -> str:
        import hashlib

        h = hashlib.sha1()
        for a in self.attributes:
            h.update(a.name.encode())
            h.update(a.kind.encode())
            if a.is_nominal:
                h.update("\x1f".join(a.values).encode())
        h.update("\x1f".join(self.class_attr.values).encode())
        return h.hexdigest()


@dataclass(frozen=True)
class Condition:
    """Atomic test on one attribute: nominal equality or a numeric interval.

    Numeric intervals are half-open (lo, hi]; either end may be infinite.
    """

    attr_index: int
    value: int | None = None  # nominal value index
    lo: float = math.nan
    hi: float = math.nan

    def __post_init__(self):
        if self.value is None:
            if math.isnan(self.lo) or math.isnan(self.hi):
                raise DataError("interval condition needs both bounds")
            if not self.lo < self.hi:
                raise DataError("interval lower bound must be below upper bound")

    @staticmethod
    def equals(attr_index: int, value: int) -> "Condition":
        return Condition(attr_index, value=value)

    @staticmethod
    def interval(attr_index: int, lo: float, hi: float) -> "Condition":
        return Condition(attr_index, lo=lo, hi=hi)

    @property
    def is_equality(self) -> bool:
        return self.value is not None

    def holds(self, values: np.ndarray) -> np.ndarray:
        """Evaluate on a (n, m) matrix (or a single row) -> boolean vector."""
        col = np.atleast_2d(values)[:, self.attr_index]
        if self.is_equality:
            return col == self.value
        return (col > self.lo) & (col <= self.hi)

    def key(self) -> str:
        if self.is_equality:
            return f"{self.attr_index}={self.value}"
        return f"{self.attr_index}in({self.lo!r},{self.hi!r}]"

    def render(self, attrs) -> str:
        a = attrs[self.attr_index]
        if self.is_equality:
            return f"{a.name}={a.values[self.value]}"
        if math.isinf(self.lo) and not math.isinf(self.hi):
            return f"{a.name}<={_fmt(self.hi)}"
        if math.isinf(self.hi) and not math.isinf(self.lo):
            return f"{a.name}>{_fmt(self.lo)}"
        return f"{a.name} in ({_fmt(self.lo)},{_fmt(self.hi)}]"


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def validate_conditions(ds: Dataset, conditions) -> None:
    for c in conditions:
        if not 0 <= c.attr_index < ds.m:
            raise DataError(f"condition references unknown attribute {c.attr_index}")
        a = ds.attributes[c.attr_index]
        if c.is_equality and not a.is_nominal:
            raise DataError(f"equality condition on numeric attribute {a.name!r}")
        if not c.is_equality and a.is_nominal:
            raise DataError(f"interval condition on nominal attribute {a.name!r}")


# ---------------------------------------------------------------------------
# discretisation

def discretize(ds: Dataset, attr_index: int, bins: int) -> list[float]:
    """Equal-width cut points over the observed range of a numeric attribute.

    Returns bins-1 strictly increasing reals; a constant attribute yields [].
    """
    a = ds.attributes[attr_index]
    if a.is_nominal:
        raise DataError(f"cannot discretize nominal attribute {a.name!r}")
    if bins < 2:
        raise ConfigError("bins must be at least 2")
    col = ds.values[:, attr_index]
    lo, hi = float(col.min()), float(col.max())
    if lo == hi:
        return []
    cuts = [lo + (hi - lo) * k / bins for k in range(1, bins)]
    out: list[float] = []
    for c in cuts:  # guard against float collapse on tiny ranges
        if not out or c > out[-1]:
            out.append(c)
    return out


def interval_cells(attr_index: int, cuts: list[float]) -> list[Condition]:
    """One interval condition per discretisation cell, open-ended at the extremes."""
    if not cuts:
        return []
    bounds = [-math.inf, *cuts, math.inf]
    return [Condition.interval(attr_index, bounds[i], bounds[i + 1])
            for i in range(len(bounds) - 1)]


# ---------------------------------------------------------------------------
# augmentation

def augment(ds: Dataset, features) -> Dataset:
    """Append one materialised column per feature; original columns untouched."""
    if not features:
        return ds
    new_attrs = list(ds.attributes)
    cols = [ds.values]
    for f in features:
        try:
            col, kind, domain = f.materialize(ds)
        except IndexError:
            raise DataError(f"feature {f!r} references an unknown attribute") from None
        except ZeroDivisionError as exc:
            raise DataError(f"feature {f!r} is undefined on this data: {exc}") from None
        name = f.render(ds.attributes)
        idx = len(new_attrs)
        if kind == NOMINAL:
            new_attrs.append(AttributeDescriptor(name, idx, NOMINAL, values=tuple(domain)))
        else:
            new_attrs.append(AttributeDescriptor(name, idx, NUMERIC,
                                                 lo=float(col.min()), hi=float(col.max())))
        cols.append(np.asarray(col, dtype=np.float64).reshape(-1, 1))
    return Dataset(tuple(new_attrs), ds.class_attr, np.hstack(cols), ds.labels.copy(),
                   ds.relation)


# ---------------------------------------------------------------------------
# CSV

_MISSING = {"", "?"}


def load_csv(path, class_column: str | None = None, type_hints: dict | None = None) -> Dataset:
    """Load a headered CSV. Columns where every cell parses as a real become
    numeric, the rest nominal (value order = first appearance); `type_hints`
    ({column: "nominal"|"numeric"}) overrides detection. The class column
    (default: last) is always nominal.
    """
    type_hints = type_hints or {}
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if r]
    if not rows:
        raise DataError(f"{path}: empty file")
    header, data = rows[0], rows[1:]
    if not data:
        raise DataError(f"{path}: no data rows")
    width = len(header)
    for i, r in enumerate(data):
        if len(r) != width:
            raise DataError(f"{path}: row {i + 2} has {len(r)} cells, expected {width}")
    if class_column is None:
        class_idx = width - 1
    else:
        try:
            class_idx = header.index(class_column)
        except ValueError:
            raise DataError(f"{path}: class column {class_column!r} not found") from None

    columns = list(zip(*data))
    attrs: list[AttributeDescriptor] = []
    mat_cols: list[np.ndarray] = []
    out_idx = 0
    class_attr = None
    class_codes = None
    for j, name in enumerate(header):
        cells = columns[j]
        for c in cells:
            if c.strip() in _MISSING:
                raise DataError(f"{path}: missing value in column {name!r}")
        hint = type_hints.get(name)
        if j == class_idx:
            class_attr, class_codes = _nominal_column(name, -1, cells)
            continue
        numeric = _column_is_numeric(cells) if hint is None else hint == NUMERIC
        if numeric:
            try:
                col = np.array([float(c) for c in cells])
            except ValueError as exc:
                raise DataError(f"{path}: unparseable numeric cell in column {name!r}: {exc}")
            attrs.append(AttributeDescriptor(name, out_idx, NUMERIC,
                                             lo=float(col.min()), hi=float(col.max())))
        else:
            desc, col = _nominal_column(name, out_idx, cells)
            attrs.append(desc)
        mat_cols.append(np.asarray(col, dtype=np.float64))
        out_idx += 1
    if not attrs:
        raise DataError(f"{path}: no attribute columns besides the class")
    return Dataset(tuple(attrs), class_attr, np.column_stack(mat_cols),
                   np.asarray(class_codes, dtype=np.int64))


def _column_is_numeric(cells) -> bool:
    for c in cells:
        try:
            float(c)
        except ValueError:
            return False
    return True


def _nominal_column(name, index, cells):
    order: dict[str, int] = {}
    codes = []
    for c in cells:
        if c not in order:
            order[c] = len(order)
        codes.append(order[c])
    desc = AttributeDescriptor(name, index, NOMINAL, values=tuple(order))
    return desc, np.asarray(codes, dtype=np.float64)


def save_csv(ds: Dataset, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([*ds.attribute_names(), ds.class_attr.name])
        for i in range(ds.n):
            row = [ds.decoded_cell(i, j) for j in range(ds.m)]
            row.append(ds.class_attr.values[ds.labels[i]])
            w.writerow(row)


# ---------------------------------------------------------------------------
# ARFF (minimal: @relation / @attribute / @data, nominal + numeric only)

def load_arff(path, class_name: str | None = None) -> Dataset:
    relation = "data"
    decls: list[tuple[str, str, tuple[str, ...] | None]] = []
    data_rows: list[list[str]] = []
    in_data = False
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("%"):
                continue
            if in_data:
                data_rows.append(_split_arff_row(line))
                continue
            low = line.lower()
            if low.startswith("@relation"):
                relation = line.split(None, 1)[1].strip().strip("'\"") if " " in line else relation
            elif low.startswith("@attribute"):
                decls.append(_parse_arff_attribute(line, path, lineno))
            elif low.startswith("@data"):
                in_data = True
            else:
                raise DataError(f"{path}:{lineno}: unexpected line {line!r}")
    if not decls:
        raise DataError(f"{path}: no @attribute declarations")
    if not data_rows:
        raise DataError(f"{path}: no data rows")

    if class_name is None:
        class_pos = len(decls) - 1
    else:
        names = [d[0] for d in decls]
        if class_name not in names:
            raise DataError(f"{path}: class attribute {class_name!r} not declared")
        class_pos = names.index(class_name)
    cname, ckind, cvalues = decls[class_pos]
    if ckind != NOMINAL:
        raise DataError(f"{path}: class attribute {cname!r} must be nominal")
    class_attr = AttributeDescriptor(cname, -1, NOMINAL, values=cvalues)

    attrs: list[AttributeDescriptor] = []
    positions: list[int] = []
    for pos, (name, kind, values) in enumerate(decls):
        if pos == class_pos:
            continue
        positions.append(pos)
        attrs.append(AttributeDescriptor(name, len(attrs), kind, values=values))

    n = len(data_rows)
    mat = np.empty((n, len(attrs)), dtype=np.float64)
    labels = np.empty(n, dtype=np.int64)
    for i, row in enumerate(data_rows):
        if len(row) != len(decls):
            raise DataError(f"{path}: data row {i + 1} has {len(row)} values, expected {len(decls)}")
        for j, (pos, a) in enumerate(zip(positions, attrs)):
            cell = row[pos]
            if cell in _MISSING:
                raise DataError(f"{path}: missing value in attribute {a.name!r}")
            if a.is_nominal:
                if cell not in a.values:
                    raise DataError(
                        f"{path}: value {cell!r} outside declared domain of {a.name!r}")
                mat[i, j] = a.values.index(cell)
            else:
                try:
                    mat[i, j] = float(cell)
                except ValueError:
                    raise DataError(f"{path}: unparseable numeric value {cell!r} in {a.name!r}")
        lab = row[class_pos]
        if lab not in class_attr.values:
            raise DataError(f"{path}: class value {lab!r} outside declared domain")
        labels[i] = class_attr.values.index(lab)
    # refresh observed ranges on numeric attributes
    final_attrs = []
    for a in attrs:
        if a.is_nominal:
            final_attrs.append(a)
        else:
            col = mat[:, a.index]
            final_attrs.append(AttributeDescriptor(a.name, a.index, NUMERIC,
                                                   lo=float(col.min()), hi=float(col.max())))
    return Dataset(tuple(final_attrs), class_attr, mat, labels, relation)


def _parse_arff_attribute(line, path, lineno):
    body = line.split(None, 1)[1].strip()
    if body.startswith("'"):
        end = body.index("'", 1)
        name = body[1:end]
        rest = body[end + 1:].strip()
    else:
        parts = body.split(None, 1)
        if len(parts) != 2:
            raise DataError(f"{path}:{lineno}: malformed @attribute")
        name, rest = parts
    rest = rest.strip()
    if rest.startswith("{"):
        if not rest.endswith("}"):
            raise DataError(f"{path}:{lineno}: unterminated nominal domain")
        values = tuple(v.strip().strip("'\"") for v in rest[1:-1].split(","))
        if any(not v for v in values):
            raise DataError(f"{path}:{lineno}: empty nominal value")
        return name, NOMINAL, values
    if rest.lower() in ("numeric", "real", "integer"):
        return name, NUMERIC, None
    raise DataError(f"{path}:{lineno}: unknown attribute type {rest!r}")


def _split_arff_row(line: str) -> list[str]:
    return next(csv.reader([line], skipinitialspace=True))


def save_arff(ds: Dataset, path) -> None:
    def quote(name: str) -> str:
        return f"'{name}'" if any(ch in name for ch in " ,{}%") else name

    with open(path, "w") as fh:
        fh.write(f"@relation {quote(ds.relation)}\n\n")
        for a in ds.attributes:
            if a.is_nominal:
                fh.write(f"@attribute {quote(a.name)} {{{','.join(a.values)}}}\n")
            else:
                fh.write(f"@attribute {quote(a.name)} numeric\n")
        fh.write(f"@attribute {quote(ds.class_attr.name)} {{{','.join(ds.class_attr.values)}}}\n")
        fh.write("\n@data\n")
        for i in range(ds.n):
            cells = [ds.decoded_cell(i, j) for j in range(ds.m)]
            cells.append(ds.class_attr.values[ds.labels[i]])
            fh.write(",".join(cells) + "\n")
