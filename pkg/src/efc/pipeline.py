"""End-to-end orchestration: explain, mine groups, construct, score, augment.
Also the exhaustive-search baseline, cross-validation and benchmark reports."""

from __future__ import annotations

import csv
import hashlib
import logging
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .construct import (ConstructConfig, ConstructionTimeout, DEFAULT_KINDS,
                        generate_features)
from .data import ConfigError, DataError, Dataset, augment
from .explain import ExplainConfig, get_explanations, select_explanation_instances
from .groups import CandidateGroup, collect_groups
from .mdl import ScoredFeature, score_and_filter
from .model import (ForestParams, TreeParams, train_decision_tree,
                    train_naive_bayes, train_random_forest)

log = logging.getLogger(__name__)

EXHAUSTIVE_BUDGET_DEFAULT = 3 * 3600.0


@dataclass(frozen=True)
class EfcConfig:
    thr_l: float = 0.1
    thr_u: float = 0.8
    step: float = 0.1
    noise_thr: float = 0.01
    cf: float = 0.6
    pci: float | None = None
    bins: int = 4
    min_score: float = 0.0
    enabled_kinds: tuple[str, ...] = DEFAULT_KINDS
    logical_ops: tuple[str, ...] = ("and", "or", "equiv", "xor", "implies")
    logical_operand_style: str = "conditions"
    max_conds: int | None = None
    explain: ExplainConfig = field(default_factory=ExplainConfig)
    model: ForestParams = field(default_factory=ForestParams)
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.thr_l <= self.thr_u <= 1:
            raise ConfigError("need 0 < thr_l <= thr_u <= 1")
        if self.step <= 0:
            raise ConfigError("step must be positive")
        if not 0 <= self.noise_thr < 1:
            raise ConfigError("noise_thr must be in [0, 1)")

    def construct_config(self) -> ConstructConfig:
        return ConstructConfig(self.enabled_kinds, self.logical_ops, self.bins,
                               self.cf, self.pci, self.max_conds,
                               self.logical_operand_style)

    def resolved_explain(self) -> ExplainConfig:
        e = self.explain
        return e if e.seed is not None else replace(e, seed=self.seed)

    def resolved_model(self) -> ForestParams:
        m = self.model
        return m if m.seed is not None else replace(m, seed=self.seed)


@dataclass
class EfcResult:
    groups: list[CandidateGroup]
    features: list[ScoredFeature]
    dataset: Dataset
    explained_class: int
    timings_ms: dict[str, float]
    candidate_count: int = 0
    timed_out: bool = False
    no_groups: bool = False

    def digest(self) -> str:
        """Content hash of everything except timings."""
        h = hashlib.sha256()
        for g in self.groups:
            h.update(repr((g.attrs, g.support, g.first_seen_rank)).encode())
        for s in self.features:
            h.update(s.feature.key().encode())
            h.update(f"{s.score:.12g}".encode())
        h.update(np.ascontiguousarray(self.dataset.values).tobytes())
        h.update(self.dataset.labels.tobytes())
        h.update(str(self.explained_class).encode())
        return h.hexdigest()


class _Stopwatch:
    def __init__(self):
        self.timings: dict[str, float] = {}
        self._t = time.monotonic()

    def lap(self, name: str):
        now = time.monotonic()
        self.timings[name] = round((now - self._t) * 1000.0, 3)
        self._t = now


def run_efc(ds: Dataset, cfg: EfcConfig | None = None,
            groups_override: list | None = None,
            deadline: float | None = None) -> EfcResult:
    """The full construction pipeline on one dataset.

    `groups_override` skips model training, explanation and mining, feeding
    the enumerator directly (used by the exhaustive baseline and by tests).
    """
    cfg = cfg or EfcConfig()
    if ds.n_classes < 2 or len(np.unique(ds.labels)) < 2:
        raise DataError("need at least two classes present")
    watch = _Stopwatch()

    if groups_override is None:
        model = train_random_forest(ds, cfg.resolved_model())
        watch.lap("train_model")
        explain_cfg = cfg.resolved_explain()
        class_index, instance_idx = select_explanation_instances(ds, explain_cfg)
        matrix = get_explanations(ds.subset(instance_idx), model, class_index,
                                  explain_cfg, background=ds)
        watch.lap("explain")
        groups = collect_groups(matrix, cfg.thr_l, cfg.thr_u, cfg.step, cfg.noise_thr)
        watch.lap("groups")
    else:
        explain_cfg = cfg.resolved_explain()
        class_index, _ = select_explanation_instances(ds, explain_cfg)
        groups = list(groups_override)
        watch.lap("groups")

    if not groups:
        log.warning("no candidate groups survived mining; returning the dataset unchanged")
        watch.lap("construct")
        return EfcResult([], [], ds, class_index, watch.timings, no_groups=True)

    timed_out = False
    try:
        features = generate_features(ds, groups, class_index, cfg.construct_config(),
                                     deadline)
    except ConstructionTimeout as exc:
        features = exc.partial
        timed_out = True
    watch.lap("construct")
    try:
        scored = score_and_filter(features, ds, cfg.min_score, cfg.bins, deadline)
    except ConstructionTimeout as exc:
        scored = exc.partial
        timed_out = True
    watch.lap("score")
    enriched = augment(ds, [s.feature for s in scored])
    watch.lap("augment")
    return EfcResult(groups, scored, enriched, class_index, watch.timings,
                     candidate_count=len(features), timed_out=timed_out)


def all_attributes_group(ds: Dataset) -> CandidateGroup:
    return CandidateGroup(tuple(range(ds.m)), ds.n, 0)


def run_exhaustive(ds: Dataset, cfg: EfcConfig | None = None,
                   budget_seconds: float = EXHAUSTIVE_BUDGET_DEFAULT) -> EfcResult:
    """Same enumerator over a single group holding every attribute; aborts
    with partial results and a timeout flag once the budget is spent."""
    deadline = time.monotonic() + budget_seconds
    return run_efc(ds, cfg, groups_override=[all_attributes_group(ds)],
                   deadline=deadline)


# ---------------------------------------------------------------------------
# cross-validation

_CLASSIFIERS = {
    "dt": lambda ds, seed: train_decision_tree(ds, TreeParams()),
    "nb": lambda ds, seed: train_naive_bayes(ds),
    "rf": lambda ds, seed: train_random_forest(ds, ForestParams(seed=seed)),
}

FS_THRESHOLDS = (0.0, 0.25, 0.5)


@dataclass
class CvResult:
    mean_accuracy: float
    fold_accuracies: list[float]
    fold_feature_counts: list[int]
    classifier: str
    construct: str


def stratified_folds(labels: np.ndarray, folds: int, seed: int) -> list[np.ndarray]:
    """Index arrays for k folds, class-balanced when every class allows it."""
    n = labels.shape[0]
    if folds < 2 or folds > n:
        raise ConfigError("folds must be between 2 and n")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 555]))
    counts = np.bincount(labels)
    buckets: list[list[int]] = [[] for _ in range(folds)]
    if (counts[counts > 0] < folds).any():
        log.warning("a class has fewer instances than folds; using plain folds")
        order = rng.permutation(n)
        for i, idx in enumerate(order):
            buckets[i % folds].append(int(idx))
    else:
        for c in np.nonzero(counts)[0]:
            idx = rng.permutation(np.nonzero(labels == c)[0])
            for i, v in enumerate(idx):
                buckets[i % folds].append(int(v))
    return [np.sort(np.asarray(b, dtype=np.int64)) for b in buckets]


def construct_fold_features(train: Dataset, cfg: EfcConfig) -> EfcResult:
    """Feature construction for one CV fold; sees only the training split."""
    return run_efc(train, cfg)


def cross_validate(ds: Dataset, classifier: str = "dt", folds: int = 10, seed: int = 0,
                   construct: str = "base", cfg: EfcConfig | None = None) -> CvResult:
    """Stratified k-fold accuracy. With construction enabled, features are
    mined and scored inside each training fold and only materialised on the
    test fold.

    construct: "base" (none), "all" (cfg's kinds), or "fs" (pick the MDL
    cutoff from {0, 0.25, 0.5} on an internal 75:25 split of each fold).
    """
    if classifier not in _CLASSIFIERS:
        raise ConfigError(f"unknown classifier {classifier!r}")
    if construct not in ("base", "all", "fs"):
        raise ConfigError(f"unknown construction mode {construct!r}")
    cfg = cfg or EfcConfig()
    train_fn = _CLASSIFIERS[classifier]
    fold_idx = stratified_folds(ds.labels, folds, seed)
    accs: list[float] = []
    feature_counts: list[int] = []
    for k, test_rows in enumerate(fold_idx):
        train_rows = np.setdiff1d(np.arange(ds.n), test_rows)
        train, test = ds.subset(train_rows), ds.subset(test_rows)
        if construct == "base":
            enriched_train, enriched_test = train, test
            feature_counts.append(0)
        else:
            fold_cfg = replace(cfg, seed=cfg.seed + 1000 * (k + 1))
            if construct == "fs":
                fold_cfg = _pick_fs_threshold(train, fold_cfg, classifier, seed)
            result = construct_fold_features(train, fold_cfg)
            feats = [s.feature for s in result.features]
            enriched_train = result.dataset
            enriched_test = augment(test, feats)
            feature_counts.append(len(feats))
        model = train_fn(enriched_train, seed)
        preds = model.predict_proba_batch(enriched_test.values).argmax(axis=1)
        accs.append(float((preds == enriched_test.labels).mean()))
    return CvResult(float(np.mean(accs)), accs, feature_counts, classifier, construct)


def _pick_fs_threshold(train: Dataset, cfg: EfcConfig, classifier: str,
                       seed: int) -> EfcConfig:
    """Try each MDL cutoff on a 75:25 internal split, keep the best by CA."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 777]))
    order = rng.permutation(train.n)
    cut = max(1, int(train.n * 0.75))
    sub_rows, val_rows = np.sort(order[:cut]), np.sort(order[cut:])
    if len(np.unique(train.labels[sub_rows])) < 2 or val_rows.size == 0:
        return cfg
    sub, val = train.subset(sub_rows), train.subset(val_rows)
    result = run_efc(sub, cfg)
    best_thr, best_acc = FS_THRESHOLDS[0], -1.0
    for thr in FS_THRESHOLDS:
        feats = [s.feature for s in result.features if s.score >= thr]
        m = _CLASSIFIERS[classifier](augment(sub, feats), seed)
        preds = m.predict_proba_batch(augment(val, feats).values).argmax(axis=1)
        acc = float((preds == val.labels).mean())
        if acc > best_acc:
            best_acc, best_thr = acc, thr
    return replace(cfg, min_score=best_thr)


# ---------------------------------------------------------------------------
# benchmark reports

def benchmark_report(runs, out_dir) -> list[dict]:
    """Run a (dataset x classifier x construction mode) grid and write
    report.csv plus a readable table. Each run spec is a dict with keys
    dataset_name, dataset, classifier, construct, and optionally folds, seed,
    cfg."""
    import os

    os.makedirs(out_dir, exist_ok=True)
    rows = []
    for spec in runs:
        t0 = time.monotonic()
        res = cross_validate(spec["dataset"], spec["classifier"],
                             spec.get("folds", 10), spec.get("seed", 0),
                             spec.get("construct", "base"), spec.get("cfg"))
        elapsed = time.monotonic() - t0
        rows.append({
            "dataset": spec["dataset_name"],
            "classifier": spec["classifier"],
            "construct": spec.get("construct", "base"),
            "accuracy": round(100.0 * res.mean_accuracy, 2),
            "features_mean": round(float(np.mean(res.fold_feature_counts)), 2),
            "seconds": round(elapsed, 2),
        })
    header = ["dataset", "classifier", "construct", "accuracy", "features_mean", "seconds"]
    with open(os.path.join(out_dir, "report.csv"), "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=header)
        w.writeheader()
        w.writerows(rows)
    with open(os.path.join(out_dir, "report.txt"), "w") as fh:
        widths = {h: max(len(h), *(len(str(r[h])) for r in rows)) for h in header}
        fh.write("  ".join(h.ljust(widths[h]) for h in header) + "\n")
        for r in rows:
            fh.write("  ".join(str(r[h]).ljust(widths[h]) for h in header) + "\n")
    return rows
