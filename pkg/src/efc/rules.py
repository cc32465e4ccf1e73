"""Certainty-factor rule induction restricted to one attribute group."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import Condition, ConfigError, DataError, Dataset


@dataclass(frozen=True)
class Rule:
    """Conjunctive rule toward one class, with its training coverage."""

    conditions: tuple[Condition, ...]
    target_class: int
    covered: int
    correct: int

    def __post_init__(self):
        if not self.conditions:
            raise DataError("a rule needs at least one condition")
        if not self.covered >= self.correct >= 0:
            raise DataError("inconsistent coverage counts")

    @property
    def cf(self) -> float:
        """Laplace-corrected purity of the rule."""
        return (self.correct + 1) / (self.covered + 2)

    def fires(self, values: np.ndarray) -> np.ndarray:
        out = self.conditions[0].holds(values)
        for c in self.conditions[1:]:
            out &= c.holds(values)
        return out

    def render(self, attrs) -> str:
        return " and ".join(f"({c.render(attrs)})" for c in self.conditions)


def _foil(p_new, n_new, p_old, n_old):
    """Vectorised FOIL gain; entries with no positives get -inf."""
    p_new = np.asarray(p_new, dtype=np.float64)
    n_new = np.asarray(n_new, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        gains = p_new * (np.log2(np.where(p_new > 0, p_new / (p_new + n_new), 1.0))
                         - math.log2(p_old / (p_old + n_old)))
    return np.where(p_new > 0, gains, -math.inf)


def _best_condition(ds, attr_index, rows, pos, p_old, n_old):
    """Highest-FOIL-gain refinement on one attribute over the current cover.

    Nominal: one equality per domain value. Numeric: a <= / > pair around
    every midpoint between adjacent distinct observed values.
    Returns (gain, condition) or None.
    """
    a = ds.attributes[attr_index]
    col = ds.values[rows, attr_index]
    if a.is_nominal:
        codes = col.astype(np.int64)
        dom = a.domain_size
        tot = np.bincount(codes, minlength=dom)
        p = np.bincount(codes[pos], minlength=dom)
        valid = (tot > 0) & (tot < rows.size)
        gains = _foil(p, tot - p, p_old, n_old)
        gains[~valid] = -math.inf
        v = int(gains.argmax())
        if not math.isfinite(gains[v]):
            return None
        return float(gains[v]), Condition.equals(attr_index, v)
    order = np.argsort(col, kind="stable")
    xs = col[order]
    po = pos[order]
    boundary = np.nonzero(xs[1:] != xs[:-1])[0]
    if boundary.size == 0:
        return None
    cum_p = np.cumsum(po)[boundary]
    nl = boundary + 1
    p_total = int(pos.sum())
    le_gains = _foil(cum_p, nl - cum_p, p_old, n_old)
    gt_gains = _foil(p_total - cum_p, (rows.size - nl) - (p_total - cum_p), p_old, n_old)
    gains = np.concatenate([le_gains, gt_gains])
    i = int(gains.argmax())
    if not math.isfinite(gains[i]):
        return None
    mid = (float(xs[boundary[i % boundary.size]]) + float(xs[boundary[i % boundary.size] + 1])) / 2.0
    if i < boundary.size:
        cond = Condition.interval(attr_index, -math.inf, mid)
    else:
        cond = Condition.interval(attr_index, mid, math.inf)
    return float(gains[i]), cond


def learn_rules(ds: Dataset, attr_subset, target_class: int, cf_threshold: float,
                max_conds: int | None = None,
                active_mask: np.ndarray | None = None) -> list[Rule]:
    """Sequential covering: greedily grow one conjunctive rule at a time by
    FOIL gain over the subset's attributes, accept it if its certainty factor
    reaches cf_threshold, remove the positives it covers, repeat.

    `active_mask` restricts the learner to a subset of rows; the caller masks
    out positives already covered by earlier groups when chaining.
    """
    attr_subset = sorted(set(attr_subset))
    if not attr_subset:
        raise ConfigError("empty attribute subset")
    for a in attr_subset:
        if not 0 <= a < ds.m:
            raise DataError(f"attribute index {a} out of range")
    if max_conds is None:
        max_conds = len(attr_subset)
    X, y = ds.values, ds.labels
    active = np.ones(ds.n, dtype=bool) if active_mask is None else active_mask.copy()
    is_pos = y == target_class
    rules: list[Rule] = []

    while (active & is_pos).any():
        conds: list[Condition] = []
        cover = active.copy()
        used_equalities: set[int] = set()
        while len(conds) < max_conds:
            rows = np.nonzero(cover)[0]
            pos = is_pos[rows]
            p_old = int(pos.sum())
            n_old = rows.size - p_old
            if n_old == 0 or p_old == 0:
                break
            best = None
            best_gain = 1e-12
            for a in attr_subset:
                if a in used_equalities:
                    continue
                found = _best_condition(ds, a, rows, pos, p_old, n_old)
                if found is not None and found[0] > best_gain + 1e-12:
                    best_gain, best = found
            if best is None:
                break
            conds.append(best)
            cover &= best.holds(X)
            if best.is_equality:
                used_equalities.add(best.attr_index)
        if not conds:
            break
        covered = int(cover.sum())
        correct = int((cover & is_pos).sum())
        rule = Rule(tuple(conds), target_class, covered, correct)
        # the Laplace cf is always below 1, so a threshold of 1.0 means
        # "accept only pure rules"
        pure = covered > 0 and covered == correct
        accepted = rule.cf >= cf_threshold or (cf_threshold >= 1.0 and pure)
        if not accepted:
            break
        rules.append(rule)
        active &= ~(cover & is_pos)
    return rules
