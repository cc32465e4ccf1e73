"""Candidate feature enumeration: operator-based constructs over attribute
groups, plus rule and threshold features grown from the rule learner."""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass

import numpy as np

from .data import (NOMINAL, NUMERIC, Condition, ConfigError, DataError, Dataset,
                   discretize, interval_cells)
from .rules import Rule, learn_rules

LOGICAL_OPS = ("and", "or", "equiv", "xor", "implies")
RELATIONAL_OPS = ("lessThan", "notEqual")
NUMERICAL_OPS = ("add", "subtract", "divide")
ALL_KINDS = ("logical", "relational", "cartesian", "numerical", "rule", "threshold")
DEFAULT_KINDS = ("logical", "relational", "cartesian", "rule", "threshold")

_OP_SYMBOL = {"and": "and", "or": "or", "equiv": "<=>", "xor": "xor", "implies": "=>",
              "lessThan": "<", "notEqual": "!=", "add": "+", "subtract": "-",
              "divide": "/"}


class ConstructionTimeout(Exception):
    """The enumeration deadline passed; carries the features built so far."""

    def __init__(self, partial):
        super().__init__("feature construction hit its time budget")
        self.partial = partial


@dataclass(frozen=True)
class ConstructConfig:
    enabled_kinds: tuple[str, ...] = DEFAULT_KINDS
    logical_ops: tuple[str, ...] = LOGICAL_OPS
    bins: int = 4
    cf: float = 0.6
    pci: float | None = None
    max_conds: int | None = None
    # "conditions": operands are atomic conditions; "binary_attrs": operands
    # are bare binary attributes (rendered by name), for purely binary data
    logical_operand_style: str = "conditions"

    def __post_init__(self):
        for k in self.enabled_kinds:
            if k not in ALL_KINDS:
                raise ConfigError(f"unknown feature kind {k!r}")
        for op in self.logical_ops:
            if op not in LOGICAL_OPS:
                raise ConfigError(f"unknown logical operator {op!r}")
        if self.pci is not None and not 0 < self.pci <= 1:
            raise ConfigError("pci must be in (0, 1]")
        if self.logical_operand_style not in ("conditions", "binary_attrs"):
            raise ConfigError(f"unknown operand style {self.logical_operand_style!r}")


class Feature:
    """Evaluable construct over original attributes.

    Subclasses provide `key()` (canonical identity for deduplication),
    `render(attrs)`, a vectorised `column(values)` and `materialize(ds)`
    returning (column, output kind, nominal domain or None).
    """

    kind = "feature"
    source_group: tuple[int, ...] = ()

    def key(self) -> str:
        raise NotImplementedError

    def render(self, attrs) -> str:
        raise NotImplementedError

    def column(self, values: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def materialize(self, ds: Dataset):
        col = self.column(ds.values)
        return col.astype(np.float64), NOMINAL, ("false", "true")

    def __repr__(self):
        return f"<{type(self).__name__} {self.key()}>"


_BOOL_DOMAIN = ("false", "true")


@dataclass(frozen=True, repr=False)
class LogicalFeature(Feature):
    op: str
    conditions: tuple[Condition, ...]
    source_group: tuple[int, ...] = ()
    bare: bool = False  # render operands as bare attribute names

    kind = "logical"

    def key(self) -> str:
        parts = [c.key() for c in self.conditions]
        if self.op in ("and", "or", "equiv", "xor"):
            parts = sorted(parts)
        return f"logical:{self.op}:" + "|".join(parts)

    def render(self, attrs) -> str:
        if self.bare:
            names = [attrs[c.attr_index].name for c in self.conditions]
        else:
            names = [f"({c.render(attrs)})" for c in self.conditions]
        return f" {_OP_SYMBOL[self.op]} ".join(names)

    def column(self, values) -> np.ndarray:
        truths = [c.holds(values) for c in self.conditions]
        if self.op == "and":
            out = truths[0]
            for t in truths[1:]:
                out = out & t
        elif self.op == "or":
            out = truths[0]
            for t in truths[1:]:
                out = out | t
        elif self.op == "equiv":
            out = truths[0] == truths[1]
        elif self.op == "xor":
            out = truths[0] != truths[1]
        else:  # implies
            out = ~truths[0] | truths[1]
        return out


@dataclass(frozen=True, repr=False)
class RelationalFeature(Feature):
    op: str
    left: int
    right: int
    source_group: tuple[int, ...] = ()

    kind = "relational"

    def key(self) -> str:
        a, b = self.left, self.right
        if self.op == "notEqual":
            a, b = min(a, b), max(a, b)
        return f"relational:{self.op}:{a}|{b}"

    def render(self, attrs) -> str:
        return f"{attrs[self.left].name} {_OP_SYMBOL[self.op]} {attrs[self.right].name}"

    def column(self, values) -> np.ndarray:
        values = np.atleast_2d(values)
        l, r = values[:, self.left], values[:, self.right]
        return l < r if self.op == "lessThan" else l != r


@dataclass(frozen=True, repr=False)
class CartesianFeature(Feature):
    left: int
    right: int
    source_group: tuple[int, ...] = ()

    kind = "cartesian"

    def key(self) -> str:
        return f"cartesian:{min(self.left, self.right)}|{max(self.left, self.right)}"

    def render(self, attrs) -> str:
        return f"{attrs[self.left].name} x {attrs[self.right].name}"

    def column(self, values) -> np.ndarray:
        raise DataError("cartesian features need the dataset's domains; use materialize")

    def materialize(self, ds: Dataset):
        la, ra = ds.attributes[self.left], ds.attributes[self.right]
        codes = (ds.values[:, self.left].astype(np.int64) * ra.domain_size
                 + ds.values[:, self.right].astype(np.int64))
        domain = tuple(f"{lv}|{rv}" for lv in la.values for rv in ra.values)
        return codes.astype(np.float64), NOMINAL, domain


@dataclass(frozen=True, repr=False)
class NumericalFeature(Feature):
    op: str
    left: int
    right: int
    source_group: tuple[int, ...] = ()

    kind = "numerical"

    def key(self) -> str:
        a, b = self.left, self.right
        if self.op == "add":
            a, b = min(a, b), max(a, b)
        return f"numerical:{self.op}:{a}|{b}"

    def render(self, attrs) -> str:
        return f"{attrs[self.left].name} {_OP_SYMBOL[self.op]} {attrs[self.right].name}"

    def column(self, values) -> np.ndarray:
        values = np.atleast_2d(values)
        l, r = values[:, self.left], values[:, self.right]
        if self.op == "add":
            return l + r
        if self.op == "subtract":
            return l - r
        if (r == 0).any():
            raise ZeroDivisionError(f"division by zero in feature {self.key()}")
        return l / r

    def materialize(self, ds: Dataset):
        return self.column(ds.values).astype(np.float64), NUMERIC, None


@dataclass(frozen=True, repr=False)
class RuleFeature(Feature):
    rule: Rule
    source_group: tuple[int, ...] = ()

    kind = "rule"

    def key(self) -> str:
        # a rule is the conjunction of its conditions, so it deduplicates
        # against an identical logical `and`
        return "logical:and:" + "|".join(sorted(c.key() for c in self.rule.conditions))

    def render(self, attrs) -> str:
        return self.rule.render(attrs)

    def column(self, values) -> np.ndarray:
        return self.rule.fires(values)


_THRESHOLD_VARIANTS = ("numOfN", "XofN", "allOfN", "MofN")


@dataclass(frozen=True, repr=False)
class ThresholdFeature(Feature):
    variant: str
    conditions: tuple[Condition, ...]
    param: int = 0  # X for XofN, M for MofN
    source_group: tuple[int, ...] = ()

    kind = "threshold"

    def __post_init__(self):
        if self.variant not in _THRESHOLD_VARIANTS:
            raise DataError(f"unknown threshold variant {self.variant!r}")

    def key(self) -> str:
        parts = sorted(c.key() for c in self.conditions)
        return f"threshold:{self.variant}:{self.param}:" + "|".join(parts)

    def render(self, attrs) -> str:
        inner = ", ".join(f"({c.render(attrs)})" for c in self.conditions)
        name = {"numOfN": "num-of-N", "XofN": f"{self.param}-of-N",
                "allOfN": "all-of-N", "MofN": f"at-least-{self.param}-of-N"}[self.variant]
        return f"{name}({inner})"

    def column(self, values) -> np.ndarray:
        count = np.zeros(np.atleast_2d(values).shape[0], dtype=np.int64)
        for c in self.conditions:
            count += c.holds(values)
        if self.variant == "numOfN":
            return count
        if self.variant == "XofN":
            return count == self.param
        if self.variant == "allOfN":
            return count == len(self.conditions)
        return count >= self.param

    def materialize(self, ds: Dataset):
        col = self.column(ds.values)
        if self.variant == "numOfN":
            return col.astype(np.float64), NUMERIC, None
        return col.astype(np.float64), NOMINAL, _BOOL_DOMAIN


def evaluate_feature(f: Feature, ds: Dataset, row: int):
    """Value of one feature on one instance (decoded for cartesian features)."""
    if isinstance(f, CartesianFeature):
        col, _, domain = f.materialize(ds)
        return domain[int(col[row])]
    out = f.column(ds.values[row:row + 1])
    val = out[0]
    if isinstance(val, (np.bool_, bool)):
        return bool(val)
    if isinstance(f, ThresholdFeature) and f.variant == "numOfN":
        return int(val)
    return float(val)


# ---------------------------------------------------------------------------
# operator-based enumeration

def atomic_conditions(ds: Dataset, group, bins: int) -> list[Condition]:
    """Operand factory: one equality per nominal value, one interval per
    discretisation cell of a numeric attribute."""
    if not len(group):
        raise ConfigError("empty group")
    out: list[Condition] = []
    for a in sorted(group):
        desc = ds.attributes[a]
        if desc.is_nominal:
            out.extend(Condition.equals(a, v) for v in range(desc.domain_size))
        else:
            out.extend(interval_cells(a, discretize(ds, a, bins)))
    return out


def _binary_operands(ds: Dataset, group) -> list[Condition]:
    out = []
    for a in sorted(group):
        desc = ds.attributes[a]
        if not desc.is_nominal or desc.domain_size != 2:
            raise DataError("binary_attrs operand style needs binary nominal attributes")
        true_index = desc.values.index("1") if "1" in desc.values else 1
        out.append(Condition.equals(a, true_index))
    return out


def construct_operator_features(ds: Dataset, groups, cfg: ConstructConfig,
                                deadline: float | None = None) -> list[Feature]:
    """Enumerate operator features per group and deduplicate across groups.

    Logical `and`/`or` take condition pairs and triples, the other logical
    operators take pairs; operands on the same attribute are never combined.
    `implies` pairs operands in ascending attribute order; ordered numeric
    operators (lessThan, subtract, divide) generate both orders.
    """
    out: list[Feature] = []
    seen: set[str] = set()
    ticker = itertools.count()

    def add(f: Feature):
        if next(ticker) % 1024 == 0:
            _check_deadline(deadline, out, ds)
        k = f.key()
        if k not in seen:
            seen.add(k)
            out.append(f)

    for g in groups:
        _check_deadline(deadline, out, ds)
        attrs_in_group = tuple(sorted(g.attrs if hasattr(g, "attrs") else g))
        numeric = [a for a in attrs_in_group if not ds.attributes[a].is_nominal]
        nominal = [a for a in attrs_in_group if ds.attributes[a].is_nominal]

        if "logical" in cfg.enabled_kinds:
            if cfg.logical_operand_style == "binary_attrs":
                conds = _binary_operands(ds, attrs_in_group)
                bare = True
            else:
                conds = atomic_conditions(ds, attrs_in_group, cfg.bins)
                bare = False
            pairs = [(c1, c2) for c1, c2 in itertools.combinations(conds, 2)
                     if c1.attr_index != c2.attr_index]
            for op in cfg.logical_ops:
                for pair in pairs:
                    add(LogicalFeature(op, pair, attrs_in_group, bare))
                if op in ("and", "or"):
                    for triple in itertools.combinations(conds, 3):
                        if len({c.attr_index for c in triple}) == 3:
                            add(LogicalFeature(op, triple, attrs_in_group, bare))
                _check_deadline(deadline, out, ds)

        if "relational" in cfg.enabled_kinds:
            for a, b in itertools.combinations(numeric, 2):
                add(RelationalFeature("lessThan", a, b, attrs_in_group))
                add(RelationalFeature("lessThan", b, a, attrs_in_group))
                add(RelationalFeature("notEqual", a, b, attrs_in_group))

        if "cartesian" in cfg.enabled_kinds:
            for a, b in itertools.combinations(nominal, 2):
                add(CartesianFeature(a, b, attrs_in_group))

        if "numerical" in cfg.enabled_kinds:
            for a, b in itertools.combinations(numeric, 2):
                add(NumericalFeature("add", a, b, attrs_in_group))
                add(NumericalFeature("subtract", a, b, attrs_in_group))
                add(NumericalFeature("subtract", b, a, attrs_in_group))
                add(NumericalFeature("divide", a, b, attrs_in_group))
                add(NumericalFeature("divide", b, a, attrs_in_group))
    return _drop_unevaluable(out, ds)


def _drop_unevaluable(features, ds) -> list[Feature]:
    kept = []
    for f in features:
        try:
            f.materialize(ds)
        except ZeroDivisionError:
            continue
        kept.append(f)
    return kept


def _check_deadline(deadline, partial, ds):
    if deadline is not None and time.monotonic() > deadline:
        raise ConstructionTimeout(_drop_unevaluable(partial, ds))


# ---------------------------------------------------------------------------
# full generation (operator + rule + threshold features)

def generate_features(ds: Dataset, groups, class_index: int, cfg: ConstructConfig,
                      deadline: float | None = None) -> list[Feature]:
    """Operator features first, then per group (in mined order) rule features
    from the rule learner; each accepted rule with two or more conjuncts also
    spawns a num-of-N feature over its conjuncts.

    With pci set, positives covered by earlier rules are withheld from later
    groups and group iteration stops once cumulative coverage reaches
    pci * n_c. Without pci every group harvests rules from the full positive
    set (the maximal-rules setting).
    """
    features = construct_operator_features(ds, groups, cfg, deadline)
    seen = {f.key() for f in features}

    def add(f: Feature) -> None:
        k = f.key()
        if k not in seen:
            seen.add(k)
            features.append(f)

    wants_rules = "rule" in cfg.enabled_kinds
    wants_thresholds = "threshold" in cfg.enabled_kinds
    if not (wants_rules or wants_thresholds):
        return features

    is_pos = ds.labels == class_index
    n_c = int(is_pos.sum())
    couple_groups = cfg.pci is not None
    active = np.ones(ds.n, dtype=bool)
    covered_total = 0
    for g in groups:
        _check_deadline(deadline, features, ds)
        attrs_in_group = tuple(sorted(g.attrs if hasattr(g, "attrs") else g))
        rules = learn_rules(ds, attrs_in_group, class_index, cfg.cf,
                            cfg.max_conds,
                            active_mask=active if couple_groups else None)
        for rule in rules:
            if wants_rules:
                add(RuleFeature(rule, attrs_in_group))
            if wants_thresholds and len(rule.conditions) >= 2:
                add(ThresholdFeature("numOfN", rule.conditions, 0, attrs_in_group))
            if couple_groups:
                newly = rule.fires(ds.values) & is_pos & active
                covered_total += int(newly.sum())
                active &= ~newly
        if couple_groups and n_c > 0 and covered_total >= cfg.pci * n_c:
            break
    return features
