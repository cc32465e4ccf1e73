"""Per-instance attribute contributions for one class, estimated by
permutation sampling over a trained model."""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .data import ConfigError, DataError, Dataset
from .model import Model


@dataclass(frozen=True)
class ExplainConfig:
    class_to_explain: int | None = None  # None -> smallest class meeting inst_thr
    max_to_explain: int = 500
    inst_thr: float = 0.10  # minimum class support, as a fraction of n
    samples_per_attribute: int = 100
    seed: int | None = None

    def __post_init__(self):
        if self.max_to_explain < 1:
            raise ConfigError("max_to_explain must be at least 1")
        if not 0 < self.inst_thr <= 1:
            raise ConfigError("inst_thr must be in (0, 1]")
        if self.samples_per_attribute < 1:
            raise ConfigError("samples_per_attribute must be at least 1")

    def resolved_seed(self) -> int:
        return 0 if self.seed is None else self.seed


@dataclass(frozen=True)
class ExplanationMatrix:
    """e x m contributions of each attribute to predicting each instance into
    one class."""

    values: np.ndarray
    class_index: int
    sample_count: int
    seed: int
    attr_names: tuple[str, ...] = ()

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.ndim != 2:
            raise DataError("explanation matrix must be two-dimensional")
        if not np.isfinite(vals).all():
            raise DataError("explanation matrix contains non-finite entries")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def e(self) -> int:
        return self.values.shape[0]

    @property
    def m(self) -> int:
        return self.values.shape[1]


def select_explanation_instances(ds: Dataset, cfg: ExplainConfig) -> tuple[int, np.ndarray]:
    """Pick the class to explain and the instance indices to explain.

    Default class: the smallest class whose support reaches inst_thr * n.
    Supports above max_to_explain are subsampled uniformly (seeded).
    """
    counts = ds.class_counts()
    if cfg.class_to_explain is not None:
        c = cfg.class_to_explain
        if not 0 <= c < ds.n_classes:
            raise DataError(f"class index {c} out of range")
    else:
        floor = cfg.inst_thr * ds.n
        eligible = [k for k in range(ds.n_classes) if counts[k] >= floor and counts[k] > 0]
        if not eligible:
            raise DataError("no class reaches the minimum explanation support")
        c = min(eligible, key=lambda k: (counts[k], k))
    idx = np.nonzero(ds.labels == c)[0]
    if idx.size == 0:
        raise DataError(f"class {c} has no instances")
    if idx.size > cfg.max_to_explain:
        rng = np.random.default_rng(np.random.SeedSequence([cfg.resolved_seed(), 97]))
        idx = np.sort(rng.choice(idx, size=cfg.max_to_explain, replace=False))
    return c, idx


def ime_explain(model: Model, ds: Dataset, instance_index: int, class_index: int,
                samples: int, rng: np.random.Generator,
                background: Dataset | None = None) -> np.ndarray:
    """Sampled contribution of each attribute to f_c(x).

    For each attribute j and each sample: draw a random attribute permutation
    and a random background instance z, then take the difference of f_c on
    two hybrids that agree everywhere except attribute j (taken from x in one,
    from z in the other). The mean difference estimates attribute j's share.
    """
    x = ds.values[instance_index]
    B = (background or ds).values
    m = ds.m
    perms = np.tile(np.arange(m), (m, samples, 1))
    perms = rng.permuted(perms, axis=2)
    pos = np.argsort(perms, axis=2)  # pos[j, s, a] = rank of attribute a
    z = B[rng.integers(0, B.shape[0], size=(m, samples))]
    pos_j = pos[np.arange(m)[:, None], np.arange(samples)[None, :],
                np.arange(m)[:, None]][..., None]
    with_j = np.where(pos <= pos_j, x[None, None, :], z)
    without_j = np.where(pos < pos_j, x[None, None, :], z)
    stacked = np.concatenate([with_j.reshape(-1, m), without_j.reshape(-1, m)])
    uniq, inverse = np.unique(stacked, axis=0, return_inverse=True)
    preds = model.predict_proba_batch(uniq)[:, class_index][inverse]
    half = m * samples
    diffs = preds[:half] - preds[half:]
    return diffs.reshape(m, samples).mean(axis=1)


def get_explanations(ds_explain: Dataset, model: Model, class_index: int,
                     cfg: ExplainConfig, background: Dataset | None = None) -> ExplanationMatrix:
    """Explain every row of ds_explain. Rows are seeded independently, so the
    result does not depend on evaluation order (or on thread count)."""
    if ds_explain.n < 1:
        raise DataError("nothing to explain")
    seed = cfg.resolved_seed()
    samples = cfg.samples_per_attribute
    e, m = ds_explain.n, ds_explain.m

    def one_row(i: int) -> np.ndarray:
        rng = np.random.default_rng(np.random.SeedSequence([seed, 1, i]))
        return ime_explain(model, ds_explain, i, class_index, samples, rng, background)

    workers = _thread_cap()
    out = np.empty((e, m))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for i, row in enumerate(pool.map(one_row, range(e))):
                out[i] = row
    else:
        for i in range(e):
            out[i] = one_row(i)
    return ExplanationMatrix(out, class_index, samples, seed,
                             tuple(ds_explain.attribute_names()))


def _thread_cap() -> int:
    raw = os.environ.get("EFC_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def save_matrix(matrix: ExplanationMatrix, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# class_index={matrix.class_index} samples={matrix.sample_count} "
                 f"seed={matrix.seed}\n")
        w = csv.writer(fh)
        names = matrix.attr_names or [f"attr{j}" for j in range(matrix.m)]
        w.writerow(names)
        for row in matrix.values:
            w.writerow([repr(float(v)) for v in row])


def load_matrix(path) -> ExplanationMatrix:
    meta = {"class_index": -1, "samples": 0, "seed": 0}
    with open(path, newline="") as fh:
        first = fh.readline()
        if first.startswith("#"):
            for token in first[1:].split():
                if "=" in token:
                    k, v = token.split("=", 1)
                    if k in meta:
                        meta[k] = int(v)
            header_line = fh.readline()
        else:
            header_line = first
        names = tuple(next(csv.reader([header_line])))
        rows = [[float(c) for c in r] for r in csv.reader(fh) if r]
    if not rows:
        raise DataError(f"{path}: empty explanation matrix")
    if any(len(r) != len(names) for r in rows):
        raise DataError(f"{path}: ragged explanation matrix")
    if any(not math.isfinite(v) for r in rows for v in r):
        raise DataError(f"{path}: non-finite explanation value")
    return ExplanationMatrix(np.asarray(rows), meta["class_index"], meta["samples"],
                             meta["seed"], names)
