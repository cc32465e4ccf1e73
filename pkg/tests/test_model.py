import numpy as np
import pytest

from efc import (ForestParams, ModelError, SchemaMismatch, SyntheticSpec, TreeParams,
                 cross_validate, generate, load_model, predict_proba, save_model,
                 train_decision_tree, train_naive_bayes, train_random_forest)
from efc.data import AttributeDescriptor, Dataset


def nominal_ds(columns, labels, domains=None, class_values=("0", "1")):
    cols = np.asarray(columns, dtype=np.float64)
    domains = domains or [("0", "1")] * cols.shape[1]
    attrs = tuple(AttributeDescriptor(f"A{j + 1}", j, "nominal", values=tuple(domains[j]))
                  for j in range(cols.shape[1]))
    cls = AttributeDescriptor("class", -1, "nominal", values=class_values)
    return Dataset(attrs, cls, cols, np.asarray(labels, dtype=np.int64))


class TestForest:
    def test_oob_accuracy_on_toy(self, toy):
        forest = train_random_forest(toy, ForestParams(seed=1))
        assert forest.oob_accuracy is not None and forest.oob_accuracy >= 0.95

    def test_single_class_rejected(self):
        ds = nominal_ds([[0], [1], [0]], [0, 0, 0])
        with pytest.raises(ModelError):
            train_random_forest(ds)

    def test_unanimous_vote_is_a_point_mass(self, rng):
        # class equals the first attribute: every tree splits on it perfectly
        col = rng.integers(0, 2, size=200)
        ds = nominal_ds(np.column_stack([col, rng.integers(0, 2, 200)]), col)
        forest = train_random_forest(ds, ForestParams(tree_count=25, seed=0))
        p = forest.predict_proba(np.array([1.0, 0.0]))
        assert p == pytest.approx([0.0, 1.0])

    def test_probabilities_normalised(self, toy):
        forest = train_random_forest(toy, ForestParams(tree_count=10, seed=2))
        probs = forest.predict_proba_batch(toy.values[:50])
        assert np.all(probs >= 0)
        assert probs.sum(axis=1) == pytest.approx(np.ones(50), abs=1e-9)

    def test_seed_determinism(self, toy):
        a = train_random_forest(toy, ForestParams(tree_count=8, seed=5))
        b = train_random_forest(toy, ForestParams(tree_count=8, seed=5))
        assert np.array_equal(a.predict_proba_batch(toy.values),
                              b.predict_proba_batch(toy.values))


class TestDecisionTree:
    def test_toy_training_accuracy(self, toy):
        dt = train_decision_tree(toy)
        acc = (dt.predict_proba_batch(toy.values).argmax(1) == toy.labels).mean()
        assert acc == 1.0

    def test_logical_conc_b_cv_100(self, logical_conc_b):
        res = cross_validate(logical_conc_b, "dt", folds=10, seed=1)
        assert res.mean_accuracy * 100 >= 99.0

    def test_numeric_noise_floor_is_majority(self, rng):
        # pure-noise numeric attributes: the tree collapses to the majority class
        n = 600
        X = rng.uniform(0, 1, size=(n, 4))
        labels = (rng.random(n) < 0.3).astype(np.int64)
        attrs = tuple(AttributeDescriptor(f"A{j + 1}", j, "numeric",
                                          lo=0.0, hi=1.0) for j in range(4))
        cls = AttributeDescriptor("class", -1, "nominal", values=("0", "1"))
        ds = Dataset(attrs, cls, X, labels)
        dt = train_decision_tree(ds)
        preds = dt.predict_proba_batch(X).argmax(1)
        majority = labels.mean() < 0.5
        assert (preds == (0 if majority else 1)).mean() >= 0.95

    def test_row_permutation_invariance(self, toy, rng):
        dt1 = train_decision_tree(toy)
        perm = rng.permutation(toy.n)
        dt2 = train_decision_tree(toy.subset(perm))
        assert np.array_equal(dt1.predict_proba_batch(toy.values),
                              dt2.predict_proba_batch(toy.values))


class TestNaiveBayes:
    def test_single_perfect_attribute(self, rng):
        col = rng.integers(0, 2, size=400)
        ds = nominal_ds(col.reshape(-1, 1), col)
        nb = train_naive_bayes(ds)
        acc = (nb.predict_proba_batch(ds.values).argmax(1) == ds.labels).mean()
        assert acc == 1.0

    def test_uniform_tables_give_uniform_posterior(self):
        # one constant attribute, balanced classes
        ds = nominal_ds([[0], [0], [0], [0]], [0, 1, 0, 1], domains=[("0", "1")])
        nb = train_naive_bayes(ds)
        assert nb.predict_proba(np.array([0.0])) == pytest.approx([0.5, 0.5])

    def test_independent_attribute_washes_out(self, rng):
        # analytic limit: log-likelihood tables of a class-independent
        # attribute converge to equality across classes
        n = 100_000
        labels = rng.integers(0, 2, size=n)
        noise = rng.integers(0, 2, size=n)
        ds = nominal_ds(np.column_stack([labels, noise]), labels)
        nb = train_naive_bayes(ds)
        table = nb.nominal_tables[1]
        assert np.abs(table[:, 0] - table[:, 1]).max() < 0.05

    def test_row_permutation_invariance(self, toy, rng):
        nb1 = train_naive_bayes(toy)
        nb2 = train_naive_bayes(toy.subset(rng.permutation(toy.n)))
        assert np.allclose(nb1.predict_proba_batch(toy.values),
                           nb2.predict_proba_batch(toy.values))

    def test_missing_class_rejected(self):
        ds = nominal_ds([[0], [1]], [0, 0], class_values=("0", "1"))
        with pytest.raises(ModelError):
            train_naive_bayes(ds)


class TestSchemaAndSerialization:
    def test_schema_mismatch_detected(self, toy):
        forest = train_random_forest(toy, ForestParams(tree_count=5, seed=0))
        other = generate(SyntheticSpec("Concept", 100, seed=1))
        with pytest.raises(SchemaMismatch):
            predict_proba(forest, other)

    def test_predict_proba_checked_path(self, toy):
        forest = train_random_forest(toy, ForestParams(tree_count=5, seed=0))
        probs = predict_proba(forest, toy, rows=[0, 1, 2])
        assert probs.shape == (3, 2)

    @pytest.mark.parametrize("trainer", [
        lambda ds: train_random_forest(ds, ForestParams(tree_count=5, seed=3)),
        lambda ds: train_decision_tree(ds, TreeParams()),
        lambda ds: train_naive_bayes(ds),
    ])
    def test_round_trip(self, tmp_path, toy, trainer):
        model = trainer(toy)
        path = tmp_path / "model.json"
        save_model(model, path)
        back = load_model(path)
        assert np.allclose(model.predict_proba_batch(toy.values[:100]),
                           back.predict_proba_batch(toy.values[:100]))
