"""Acceptance suite: every gate criterion runs at its stated tolerance and
prints one PASS/FAIL line. Heavier than the unit tests; expect ~15 minutes."""

import itertools
import math
import time
from contextlib import contextmanager

import numpy as np
import pytest

import efc
from efc import (EfcConfig, ExplainConfig, ForestParams, SyntheticSpec,
                 cross_validate, generate, mdl_score, run_efc, run_exhaustive,
                 set_weights, most_frequent_subsets, collect_groups)
from efc.construct import ConstructConfig, construct_operator_features
from efc.groups import WeightMatrix
from efc.pipeline import all_attributes_group, construct_fold_features
from efc.synth import UNRELATED_ATTRS


@contextmanager
def criterion(num, label):
    try:
        yield
    except Exception:
        print(f"ACCEPTANCE {num} {label}: FAIL")
        raise
    print(f"ACCEPTANCE {num} {label}: PASS")


GOLDEN_SEED = 7


def golden_config(samples=2000):
    return EfcConfig(
        thr_l=0.6, thr_u=0.8, step=0.1, cf=0.9, pci=0.9,
        enabled_kinds=("logical", "rule", "threshold"),
        logical_ops=("equiv", "xor", "implies"),
        logical_operand_style="binary_attrs",
        explain=ExplainConfig(samples_per_attribute=samples, seed=3),
        seed=3,
    )


@pytest.fixture(scope="module")
def golden_run():
    toy = generate(SyntheticSpec("Toy", 2000, seed=GOLDEN_SEED))
    t0 = time.monotonic()
    result = run_efc(toy, golden_config())
    noisy = generate(SyntheticSpec("Toy", 2000, seed=GOLDEN_SEED, noise_percent=5.0))
    noisy_result = run_efc(noisy, golden_config())
    elapsed = time.monotonic() - t0
    return toy, result, noisy_result, elapsed


class TestCriterion1WorkedExample:
    def test_worked_example_golden_run(self, golden_run):
        toy, result, noisy_result, elapsed = golden_run
        with criterion(1, "worked-example golden run"):
            mined = {g.attrs for g in result.groups}
            # the four reference groups, by 0-based attribute index
            for expected in [(1, 2), (3, 4), (0, 1, 2), (0, 3, 4)]:
                assert expected in mined, f"missing group {expected}"
            assert all(5 not in g for g in mined), "a group contains A6"

            e = int(toy.class_counts()[1])
            support = {g.attrs: g.support for g in result.groups}[(1, 2)]
            reference = 249 / 489
            assert abs(support / e - reference) <= 0.15 * reference

            top4 = result.features[:4]
            kinds = sorted(s.feature.kind for s in top4)
            assert kinds == ["rule", "rule", "threshold", "threshold"]
            keys = {s.feature.key() for s in top4}
            conds_a = "0=0|1=1|2=1"   # (A1=0, A2=1, A3=1)
            conds_b = "0=1|3=1|4=1"   # (A1=1, A4=1, A5=1)
            assert {f"logical:and:{conds_a}", f"logical:and:{conds_b}",
                    f"threshold:numOfN:0:{conds_a}",
                    f"threshold:numOfN:0:{conds_b}"} == keys
            assert abs(result.features[0].score - 0.32) <= 0.05

            rules = [s.feature for s in result.features if s.feature.kind == "rule"]
            covered = np.zeros(toy.n, dtype=bool)
            for f in rules:
                covered |= f.rule.fires(toy.values)
            positives = toy.labels == 1
            assert abs(int((covered & positives).sum()) - int(positives.sum())) <= 10

            noisy_groups = {g.attrs for g in noisy_result.groups}
            assert (0, 1, 2) in noisy_groups and (0, 3, 4) in noisy_groups

            assert elapsed < 120.0, f"golden run took {elapsed:.0f}s"


class TestCriterion2GroupDetection:
    def test_group_detection_across_generators(self):
        with criterion(2, "group detection across the ten generators"):
            t0 = time.monotonic()
            clean = 0
            generator_names = [n for n in efc.DATASET_NAMES
                               if n not in ("Toy", "TicTacToe")]
            assert len(generator_names) == 10
            for name in generator_names:
                ds = generate(SyntheticSpec(name, 2000, seed=11))
                model = efc.train_random_forest(ds, ForestParams(seed=5))
                ecfg = ExplainConfig(seed=5)
                c, idx = efc.select_explanation_instances(ds, ecfg)
                E = efc.get_explanations(ds.subset(idx), model, c, ecfg, background=ds)
                groups = collect_groups(E, 0.1, 0.8, 0.1, 0.01)
                unrelated = set(UNRELATED_ATTRS[name])
                if not any(set(g.attrs) & unrelated for g in groups):
                    clean += 1
                if name == "DisjunctN":
                    assert all(set(g.attrs) <= {0, 1, 2} for g in groups), \
                        "DisjunctN group outside {A1,A2,A3}"
            assert clean >= 8, f"unrelated attributes leaked in {10 - clean} datasets"
            assert time.monotonic() - t0 < 15 * 60


class TestCriterion3SyntheticAccuracy:
    def test_dt_base_logical_conc_b(self, logical_conc_b):
        with criterion("3a", "DT base on LogicalConcB = 100 +/- 1"):
            res = cross_validate(logical_conc_b, "dt", folds=10, seed=1)
            assert 100 * res.mean_accuracy >= 99.0

    def test_nb_on_concept(self):
        concept = generate(SyntheticSpec("Concept", 2000, seed=11))
        with criterion("3b", "NB base on Concept ~ 68.25 +/- 5"):
            base = cross_validate(concept, "nb", folds=10, seed=1)
            assert abs(100 * base.mean_accuracy - 68.25) <= 5.0
        with criterion("3c", "NB with All constructs on Concept >= 85"):
            enriched = cross_validate(concept, "nb", folds=10, seed=1,
                                      construct="all", cfg=EfcConfig(seed=5))
            assert 100 * enriched.mean_accuracy >= 85.0

    def test_nb_constructs_on_disjunct(self):
        disjunct = generate(SyntheticSpec("DisjunctN", 2000, seed=11))
        with criterion("3d", "NB with constructs on DisjunctN >= 99"):
            res = cross_validate(disjunct, "nb", folds=10, seed=1,
                                 construct="all", cfg=EfcConfig(seed=5))
            assert 100 * res.mean_accuracy >= 99.0

    def test_dt_relational_on_mod_groups(self):
        mod = generate(SyntheticSpec("ModGroups", 2000, seed=11))
        with criterion("3e", "DT Rel on ModGroups >= 80 and >= base + 40"):
            base = cross_validate(mod, "dt", folds=10, seed=1)
            assert abs(100 * base.mean_accuracy - 33.85) <= 5.0
            rel_cfg = EfcConfig(enabled_kinds=("relational",), seed=5)
            rel = cross_validate(mod, "dt", folds=10, seed=1, construct="all",
                                 cfg=rel_cfg)
            assert 100 * rel.mean_accuracy >= 80.0
            assert 100 * (rel.mean_accuracy - base.mean_accuracy) >= 40.0


class TestCriterion4SearchSpaceReduction:
    def test_reduction_and_timing(self):
        with criterion(4, "search-space reduction >= 10x on 9 nominal attributes"):
            t0 = time.monotonic()
            ttt = generate(SyntheticSpec("TicTacToe", 2000, seed=13))
            assert ttt.m == 9 and all(a.is_nominal for a in ttt.attributes)
            # mined groups stay line-sized below the top threshold (see notes)
            cfg = EfcConfig(thr_u=0.7, seed=5)
            res = run_efc(ttt, cfg)
            assert res.groups, "mining found no groups"
            logical = ConstructConfig(enabled_kinds=("logical",))
            efc_count = len(construct_operator_features(ttt, res.groups, logical))
            exh_count = len(construct_operator_features(
                ttt, [all_attributes_group(ttt)], logical))
            assert exh_count >= 10 * efc_count, (exh_count, efc_count)

            t1 = time.monotonic()
            exhaustive = run_exhaustive(ttt, cfg, budget_seconds=9 * 60)
            exh_wall = time.monotonic() - t1
            assert not exhaustive.timed_out
            efc_construct = (res.timings_ms["construct"] + res.timings_ms["score"]) / 1000
            assert exh_wall >= 10 * efc_construct, (exh_wall, efc_construct)
            assert time.monotonic() - t0 < 10 * 60


class TestCriterion5ExplainerProperties:
    def test_explainer_properties(self, rng):
        from efc.model import Model

        class Stub(Model):
            def __init__(self, fn, m):
                super().__init__(2, "stub")
                self.fn = fn

            def predict_proba_batch(self, X):
                p1 = np.clip(np.apply_along_axis(self.fn, 1, np.atleast_2d(X)), 0, 1)
                return np.column_stack([1 - p1, p1])

        with criterion(5, "explainer: zero influence, efficiency, linear scaling"):
            X = rng.integers(0, 2, size=(48, 5)).astype(float)
            from efc.data import AttributeDescriptor, Dataset
            attrs = tuple(AttributeDescriptor(f"A{j+1}", j, "nominal", values=("0", "1"))
                          for j in range(5))
            cls = AttributeDescriptor("class", -1, "nominal", values=("0", "1"))
            ds = Dataset(attrs, cls, X, (X[:, 0].astype(np.int64)))

            def fn(row):
                return 0.6 * row[0] * row[1] + 0.4 * row[2]

            model = Stub(fn, 5)
            phi = efc.ime_explain(model, ds, 2, 1, samples=2000,
                                  rng=np.random.default_rng(5))
            # attributes 3 and 4 are never read
            assert phi[3] == 0.0 and phi[4] == 0.0

            # efficiency against the subset-enumeration oracle
            x = ds.values[2]

            def v(S):
                hybrid = X.copy()
                for j in S:
                    hybrid[:, j] = x[j]
                return float(np.mean([fn(r) for r in hybrid]))

            m = 5
            oracle = np.zeros(m)
            for j in range(m):
                others = [k for k in range(m) if k != j]
                for size in range(m):
                    w = (math.factorial(size) * math.factorial(m - size - 1)
                         / math.factorial(m))
                    for S in itertools.combinations(others, size):
                        oracle[j] += w * (v(tuple(sorted(S + (j,)))) - v(S))
            assert abs(phi.sum() - (fn(x) - np.mean([fn(r) for r in X]))) <= 0.02
            assert np.abs(phi - oracle).max() <= 0.02

            # linear scaling in explained rows and attributes
            import time as _t

            def timed(dataset, rows, samples=60):
                stub = Stub(lambda row: 0.5, dataset.m)
                t0 = _t.perf_counter()
                for i in range(rows):
                    efc.ime_explain(stub, dataset, i, 1, samples,
                                    np.random.default_rng(i))
                return _t.perf_counter() - t0

            def r2(xs, ys):
                xs, ys = np.asarray(xs, float), np.asarray(ys, float)
                slope, icept = np.polyfit(xs, ys, 1)
                res = ys - (slope * xs + icept)
                return 1.0 - (res ** 2).sum() / ((ys - ys.mean()) ** 2).sum()

            def binary(n, m_, seed):
                r = np.random.default_rng(seed)
                a = tuple(AttributeDescriptor(f"A{j+1}", j, "nominal",
                                              values=("0", "1")) for j in range(m_))
                return Dataset(a, cls, r.integers(0, 2, size=(n, m_)).astype(float),
                               r.integers(0, 2, size=n))

            e_points = [20, 40, 60, 80]
            base_ds = binary(400, 8, 0)
            e_times = [min(timed(base_ds, e) for _ in range(3)) for e in e_points]
            assert r2(e_points, e_times) >= 0.95, e_times

            m_points = [6, 8, 10, 12]
            m_times = [min(timed(binary(400, m_, 1), 30) for _ in range(3))
                       for m_ in m_points]
            assert r2(m_points, m_times) >= 0.95, m_times


class TestCriterion6GroupMiningProperties:
    def test_thousand_random_matrices(self):
        with criterion(6, "group-mining invariants over 1000 random matrices"):
            rng = np.random.default_rng(2024)
            for trial in range(1000):
                e = int(rng.integers(1, 14))
                m = int(rng.integers(2, 10))
                E = rng.normal(size=(e, m)) * (rng.random((e, m)) < 0.75)
                q_lo, q_hi = np.sort(rng.uniform(0.05, 1.0, size=2))
                W_lo = set_weights(E, q_lo).values
                W_hi = set_weights(E, q_hi).values
                assert (W_lo <= W_hi).all()  # monotone in q
                absE = np.abs(E)
                sums = absE.sum(axis=1)
                for i in range(e):
                    if sums[i] == 0:
                        assert W_hi[i].sum() == 0
                        continue
                    a = absE[i] / sums[i]
                    marked = a[W_hi[i] == 1]
                    assert marked.sum() >= q_hi - 1e-9  # reaches the threshold
                    if W_hi[i].sum() > 1:  # minimal prefix
                        assert marked.sum() - marked.min() < q_hi + 1e-9

                noise_thr = float(rng.uniform(0, 0.5))
                groups = most_frequent_subsets(set_weights(E, q_hi), noise_thr)
                floor = max(1, math.ceil(noise_thr * e))
                seen = set()
                for g in groups:
                    assert len(g.attrs) >= 2      # singletons removed
                    assert g.support >= floor     # noise floor enforced
                    assert g.attrs not in seen
                    seen.add(g.attrs)
                # exact-set semantics: per-set counts sum to the number of
                # rows with two or more marks (no subset closure)
                row_sizes = W_hi.sum(axis=1)
                eligible = int((row_sizes >= 2).sum())
                full = most_frequent_subsets(WeightMatrix(W_hi, q_hi), 0.0)
                assert sum(g.support for g in full) == eligible

    def test_subset_counts_not_closed(self):
        # a superset may legitimately outcount its subset under exact-set
        # counting (the reference tables rely on this)
        rows = np.array([[1, 1, 1, 0]] * 5 + [[1, 1, 0, 0]] * 2, dtype=np.uint8)
        got = {g.attrs: g.support for g in
               most_frequent_subsets(WeightMatrix(rows, 0.5), 0.0)}
        assert got[(0, 1, 2)] == 5 and got[(0, 1)] == 2


class TestCriterion7MdlProperties:
    def test_mdl_properties(self):
        with criterion(7, "MDL score properties"):
            labels = np.array([0, 1] * 50)
            h = 50
            direct = (math.log2(math.comb(100, h)) + math.log2(101)
                      - 2 * math.log2(h + 1)) / 100
            assert mdl_score(labels.copy(), labels) == pytest.approx(direct, abs=1e-6)

            rng = np.random.default_rng(7)
            for trial in range(100):
                r = np.random.default_rng(trial)
                labs = r.integers(0, 2, size=128)
                assert mdl_score(np.zeros(128, dtype=int), labs) <= 1e-12
                col = r.integers(0, 4, size=128)
                perm = r.permutation(128)
                assert mdl_score(col, labs) == pytest.approx(
                    mdl_score(col[perm], labs[perm]))
                assert mdl_score(col, labs) == pytest.approx(
                    mdl_score(col, 1 - labs))
                # a class-identical feature beats any random feature
                assert mdl_score(labs.copy(), labs) > mdl_score(
                    r.integers(0, 2, size=128), labs)


class TestCriterion8PipelineHygiene:
    def test_pipeline_hygiene(self):
        with criterion(8, "determinism, CV leakage, exhaustive equivalence"):
            concept = generate(SyntheticSpec("Concept", 800, seed=4))
            cfg = EfcConfig(explain=ExplainConfig(samples_per_attribute=32,
                                                  max_to_explain=120, seed=2),
                            model=ForestParams(tree_count=32, seed=2), seed=2)
            twice = [run_efc(concept, cfg).digest() for _ in range(2)]
            assert twice[0] == twice[1]

            # leakage: fold features are a function of the training split only
            train = concept.subset(range(0, 600))
            h1 = construct_fold_features(train, cfg).digest()
            h2 = construct_fold_features(concept.subset(range(0, 600)), cfg).digest()
            assert h1 == h2

            # exhaustive equals the pipeline under an all-attributes group
            assert concept.m <= 5
            exhaustive = run_exhaustive(concept, cfg)
            override = run_efc(concept, cfg,
                               groups_override=[all_attributes_group(concept)])
            assert [s.feature.key() for s in exhaustive.features] == \
                   [s.feature.key() for s in override.features]
