"""MDL-based scoring of discrete feature columns against the class labels.

The score is the per-instance saving from encoding the labels inside the
feature's partition cells instead of as one block: both encodings price the
class counts with a multinomial codebook plus the cost of transmitting the
count vector itself.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .data import NUMERIC, DataError, Dataset
from .construct import ConstructionTimeout, Feature

_LN2 = math.log(2.0)


def _log2_factorial(n: int) -> float:
    return math.lgamma(n + 1) / _LN2


def _log2_multinomial(counts) -> float:
    n = int(sum(counts))
    return _log2_factorial(n) - sum(_log2_factorial(int(c)) for c in counts)


def _log2_binomial(n: int, k: int) -> float:
    return _log2_factorial(n) - _log2_factorial(k) - _log2_factorial(n - k)


def mdl_score(feature_column, labels, n_classes: int | None = None) -> float:
    """Bits per instance saved by partitioning the labels on the feature.

    Both vectors must be discrete codes of equal length; continuous columns
    must be discretised first.
    """
    col = np.asarray(feature_column)
    labs = np.asarray(labels)
    if col.shape != labs.shape or col.ndim != 1 or col.size == 0:
        raise DataError("feature column and labels must be equal-length vectors")
    if np.issubdtype(col.dtype, np.floating):
        if not (col == np.floor(col)).all():
            raise DataError("feature column is continuous; discretise it before scoring")
        col = col.astype(np.int64)
    n = col.size
    C = int(n_classes if n_classes is not None else labs.max() + 1)
    class_counts = np.bincount(labs, minlength=C)
    prior = _log2_multinomial(class_counts) + _log2_binomial(n + C - 1, C - 1)
    post = 0.0
    col = col - col.min()
    cells = np.bincount(col)
    per_cell = np.zeros((cells.size, C), dtype=np.int64)
    np.add.at(per_cell, (col, labs), 1)
    for v in range(cells.size):
        nv = int(cells[v])
        if nv == 0:
            continue
        post += _log2_multinomial(per_cell[v]) + _log2_binomial(nv + C - 1, C - 1)
    return (prior - post) / n


@dataclass(frozen=True)
class ScoredFeature:
    feature: Feature
    score: float

    def __post_init__(self):
        if not math.isfinite(self.score):
            raise DataError("feature score must be finite")


def feature_codes(f: Feature, ds: Dataset, bins: int = 4) -> np.ndarray:
    """Discrete codes of a feature column, equal-width binning real outputs."""
    col, kind, _ = f.materialize(ds)
    if kind == NUMERIC and not (col == np.floor(col)).all():
        lo, hi = float(col.min()), float(col.max())
        if lo == hi:
            return np.zeros(col.size, dtype=np.int64)
        codes = np.minimum((col - lo) / (hi - lo) * bins, bins - 1).astype(np.int64)
        return codes
    return col.astype(np.int64)


def score_and_filter(features, ds: Dataset, min_score: float = 0.0, bins: int = 4,
                     deadline: float | None = None) -> list[ScoredFeature]:
    """Score every feature on the dataset, drop those below min_score, order
    by descending score with ties broken by canonical key."""
    scored: list[ScoredFeature] = []
    for i, f in enumerate(features):
        if deadline is not None and i % 64 == 0 and time.monotonic() > deadline:
            raise ConstructionTimeout(_finish(scored, min_score))
        try:
            codes = feature_codes(f, ds, bins)
        except ZeroDivisionError:
            continue
        scored.append(ScoredFeature(f, mdl_score(codes, ds.labels, ds.n_classes)))
    return _finish(scored, min_score)


def _finish(scored, min_score):
    kept = [s for s in scored if s.score >= min_score]
    kept.sort(key=lambda s: (-s.score, s.feature.key()))
    return kept


def render_ranking(scored, attrs, limit: int | None = None) -> str:
    """Human-readable score table, best first."""
    rows = scored if limit is None else scored[:limit]
    if not rows:
        return "(no features)\n"
    width = max(len(s.feature.render(attrs)) for s in rows)
    lines = [f"{'Construct':<{width}}  MDL score"]
    for s in rows:
        lines.append(f"{s.feature.render(attrs):<{width}}  {s.score:.3f}")
    return "\n".join(lines) + "\n"
