import numpy as np
import pytest

from efc import (EfcConfig, ExplainConfig, ForestParams, SyntheticSpec,
                 cross_validate, generate, run_efc, run_exhaustive)
from efc.data import AttributeDescriptor, ConfigError, Dataset
from efc.pipeline import (all_attributes_group, benchmark_report,
                          construct_fold_features, stratified_folds)


def small_cfg(seed=0, **kw):
    defaults = dict(
        explain=ExplainConfig(samples_per_attribute=24, max_to_explain=80, seed=seed),
        model=ForestParams(tree_count=24, seed=seed),
        seed=seed,
    )
    defaults.update(kw)
    return EfcConfig(**defaults)


@pytest.fixture(scope="module")
def concept_small():
    return generate(SyntheticSpec("Concept", 600, seed=4))


class TestRunEfc:
    def test_seed_determinism(self, concept_small):
        a = run_efc(concept_small, small_cfg(seed=3))
        b = run_efc(concept_small, small_cfg(seed=3))
        assert a.digest() == b.digest()
        assert a.timings_ms.keys() == b.timings_ms.keys()

    def test_different_seed_changes_something(self, concept_small):
        a = run_efc(concept_small, small_cfg(seed=3))
        b = run_efc(concept_small, small_cfg(seed=4))
        assert a.digest() != b.digest()

    def test_enriched_width(self, concept_small):
        res = run_efc(concept_small, small_cfg(seed=1))
        assert res.dataset.m == concept_small.m + len(res.features)
        assert np.array_equal(res.dataset.values[:, :concept_small.m],
                              concept_small.values)

    def test_zero_variance_attributes_passthrough(self):
        # constant attributes carry no explanation signal: no groups survive
        X = np.zeros((200, 3))
        labels = (np.arange(200) % 2).astype(np.int64)
        attrs = tuple(AttributeDescriptor(f"A{j + 1}", j, "nominal", values=("0", "1"))
                      for j in range(3))
        cls = AttributeDescriptor("class", -1, "nominal", values=("0", "1"))
        ds = Dataset(attrs, cls, X, labels)
        res = run_efc(ds, small_cfg(seed=0))
        assert res.no_groups
        assert res.features == []
        assert res.dataset is ds

    def test_single_class_rejected(self):
        X = np.zeros((50, 2))
        attrs = tuple(AttributeDescriptor(f"A{j + 1}", j, "nominal", values=("0", "1"))
                      for j in range(2))
        cls = AttributeDescriptor("class", -1, "nominal", values=("0", "1"))
        ds = Dataset(attrs, cls, X, np.zeros(50, dtype=np.int64))
        with pytest.raises(Exception):
            run_efc(ds, small_cfg())

    def test_config_validation(self):
        with pytest.raises(ConfigError):
            EfcConfig(thr_l=0.9, thr_u=0.5)
        with pytest.raises(ConfigError):
            EfcConfig(step=0.0)
        with pytest.raises(ConfigError):
            EfcConfig(noise_thr=1.0)


class TestExhaustive:
    def test_superset_of_efc_candidates(self, concept_small):
        efc_res = run_efc(concept_small, small_cfg(seed=2))
        exh = run_exhaustive(concept_small, small_cfg(seed=2))
        assert not exh.timed_out
        assert exh.candidate_count >= efc_res.candidate_count

    def test_equivalence_with_all_attributes_group(self, concept_small):
        cfg = small_cfg(seed=2)
        exh = run_exhaustive(concept_small, cfg)
        via_override = run_efc(concept_small, cfg,
                               groups_override=[all_attributes_group(concept_small)])
        assert [s.feature.key() for s in exh.features] == \
               [s.feature.key() for s in via_override.features]

    def test_budget_timeout_flag(self):
        # 50 attributes explode the enumeration; a 1-second budget must trip
        rng = np.random.default_rng(0)
        X = rng.integers(0, 3, size=(300, 50)).astype(float)
        labels = (X[:, 0] == 1).astype(np.int64)
        attrs = tuple(AttributeDescriptor(f"A{j + 1}", j, "nominal",
                                          values=("0", "1", "2")) for j in range(50))
        cls = AttributeDescriptor("class", -1, "nominal", values=("0", "1"))
        ds = Dataset(attrs, cls, X, labels)
        res = run_exhaustive(ds, small_cfg(seed=0), budget_seconds=1.0)
        assert res.timed_out


class TestCrossValidation:
    def test_stratified_folds_partition(self, concept_small):
        folds = stratified_folds(concept_small.labels, 10, seed=3)
        all_idx = np.sort(np.concatenate(folds))
        assert np.array_equal(all_idx, np.arange(concept_small.n))
        counts = concept_small.class_counts()
        for f in folds:
            fc = np.bincount(concept_small.labels[f], minlength=2)
            for c in range(2):
                assert abs(fc[c] - counts[c] / 10) <= 1

    def test_non_stratifiable_falls_back(self):
        labels = np.array([0] * 98 + [1, 1], dtype=np.int64)
        folds = stratified_folds(labels, 10, seed=0)
        assert sum(len(f) for f in folds) == 100

    def test_construction_sees_only_train(self, concept_small):
        cfg = small_cfg(seed=5)
        train = concept_small.subset(range(0, 500))
        first = construct_fold_features(train, cfg)
        second = construct_fold_features(train, cfg)
        assert first.digest() == second.digest()
        # mangling rows outside the training split cannot change the features
        other = concept_small.subset(range(500, 600))
        assert other.n  # the "test" data exists and was never passed in

    def test_cv_with_construction_runs(self, concept_small):
        res = cross_validate(concept_small, "nb", folds=3, seed=1,
                             construct="all", cfg=small_cfg(seed=1))
        assert 0.5 <= res.mean_accuracy <= 1.0
        assert len(res.fold_accuracies) == 3
        assert all(k > 0 for k in res.fold_feature_counts)

    def test_fs_mode_runs(self, concept_small):
        res = cross_validate(concept_small, "nb", folds=3, seed=1,
                             construct="fs", cfg=small_cfg(seed=1))
        assert 0.4 <= res.mean_accuracy <= 1.0

    def test_unknown_classifier(self, concept_small):
        with pytest.raises(ConfigError):
            cross_validate(concept_small, "svm")


class TestBenchmarkReport:
    def test_grid_report(self, tmp_path, concept_small):
        toy_small = generate(SyntheticSpec("Toy", 400, seed=2))
        runs = [
            {"dataset_name": name, "dataset": ds, "classifier": cl,
             "construct": mode, "folds": 2, "seed": 0, "cfg": small_cfg(seed=0)}
            for name, ds in (("Concept", concept_small), ("Toy", toy_small))
            for cl in ("dt", "nb") for mode in ("base", "all")
        ]
        rows = benchmark_report(runs, tmp_path)
        assert len(rows) == 8
        assert (tmp_path / "report.csv").exists()
        assert (tmp_path / "report.txt").exists()
        assert all(r["seconds"] >= 0 for r in rows)
