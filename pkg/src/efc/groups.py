"""Mining frequently co-occurring attribute groups from an explanation matrix."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import ConfigError, DataError
from .explain import ExplanationMatrix


@dataclass(frozen=True)
class WeightMatrix:
    """Binary e x m matrix marking each row's largest explanations."""

    values: np.ndarray
    threshold: float

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.uint8)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True)
class CandidateGroup:
    """A set of >= 2 attributes whose large explanations co-occur."""

    attrs: tuple[int, ...]  # sorted ascending
    support: int
    first_seen_rank: int

    def __post_init__(self):
        if len(self.attrs) < 2:
            raise DataError("candidate groups need at least two attributes")
        if tuple(sorted(set(self.attrs))) != self.attrs:
            raise DataError("group attributes must be sorted and duplicate-free")


def set_weights(E, q: float) -> WeightMatrix:
    """Mark, per row, the minimal prefix of attributes (by descending absolute
    normalised contribution, ties broken by ascending attribute index) whose
    normalised sum first reaches q. All-zero rows stay all-zero.
    """
    if not 0 < q <= 1:
        raise ConfigError("threshold q must be in (0, 1]")
    values = E.values if isinstance(E, ExplanationMatrix) else np.asarray(E, dtype=np.float64)
    if not np.isfinite(values).all():
        raise DataError("explanations must be finite")
    e, m = values.shape
    W = np.zeros((e, m), dtype=np.uint8)
    absvals = np.abs(values)
    sums = absvals.sum(axis=1)
    for i in range(e):
        if sums[i] == 0.0:
            continue
        a = absvals[i] / sums[i]
        order = np.argsort(-a, kind="stable")  # stable keeps ties in index order
        csum = np.cumsum(a[order])
        k = int(np.searchsorted(csum, q - 1e-12)) + 1
        k = min(k, m)
        W[i, order[:k]] = 1
    return WeightMatrix(W, q)


def most_frequent_subsets(W: WeightMatrix, noise_thr: float) -> list[CandidateGroup]:
    """Count each row's marked attribute set (exact-set semantics), drop
    singletons and sets below the noise floor, and order by descending count
    with ties broken by first appearance.
    """
    if not 0 <= noise_thr < 1:
        raise ConfigError("noise_thr must be in [0, 1)")
    vals = W.values
    e = vals.shape[0]
    floor = max(1, math.ceil(noise_thr * e))
    counts: dict[tuple[int, ...], int] = {}
    first_row: dict[tuple[int, ...], int] = {}
    for i in range(e):
        key = tuple(np.nonzero(vals[i])[0].tolist())
        if len(key) < 2:
            continue
        if key not in counts:
            counts[key] = 0
            first_row[key] = i
        counts[key] += 1
    kept = [(key, c) for key, c in counts.items() if c >= floor]
    kept.sort(key=lambda kc: (-kc[1], first_row[kc[0]]))
    return [CandidateGroup(key, c, rank) for rank, (key, c) in enumerate(kept)]


def threshold_grid(thr_l: float, thr_u: float, step: float) -> list[float]:
    if not 0 < thr_l <= thr_u <= 1:
        raise ConfigError("need 0 < thr_l <= thr_u <= 1")
    if step <= 0:
        raise ConfigError("step must be positive")
    qs = []
    k = 0
    while True:
        q = round(thr_l + k * step, 10)
        if q > thr_u + 1e-9:
            break
        qs.append(min(q, 1.0))
        k += 1
    return qs


def collect_groups(E, thr_l: float, thr_u: float, step: float,
                   noise_thr: float) -> list[CandidateGroup]:
    """Union of per-threshold mining results, first-seen order, duplicates
    dropped (a group keeps the support and rank of its first occurrence)."""
    seen: set[tuple[int, ...]] = set()
    out: list[CandidateGroup] = []
    for q in threshold_grid(thr_l, thr_u, step):
        for g in most_frequent_subsets(set_weights(E, q), noise_thr):
            if g.attrs not in seen:
                seen.add(g.attrs)
                out.append(g)
    return out


def groups_to_json(groups, attr_names) -> list[dict]:
    return [{"attrs": [attr_names[a] for a in g.attrs], "support": g.support}
            for g in groups]
