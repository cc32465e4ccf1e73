"""Trainable classifiers: a bagged random forest (used to drive explanations)
plus gain-ratio decision tree and naive Bayes evaluation models."""

from __future__ import annotations

import json
import math
import sys
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from .data import DataError, Dataset


class ModelError(ValueError):
    pass


class SchemaMismatch(ModelError):
    pass


@dataclass(frozen=True)
class ForestParams:
    tree_count: int = 100
    max_depth: int | None = None
    features_per_split: int | None = None  # None -> ceil(sqrt(m))
    min_leaf: int = 1
    seed: int | None = None

    def __post_init__(self):
        if self.tree_count < 1:
            raise ModelError("tree_count must be at least 1")


class Model:
    """Trained classifier: per-class probabilities for instances matching the
    training schema."""

    kind = "model"

    def __init__(self, n_classes: int, fingerprint: str):
        self.n_classes = n_classes
        self.fingerprint = fingerprint

    def predict_proba_batch(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def predict_proba(self, x) -> np.ndarray:
        return self.predict_proba_batch(np.atleast_2d(np.asarray(x, dtype=np.float64)))[0]

    def predict_batch(self, X) -> np.ndarray:
        return self.predict_proba_batch(X).argmax(axis=1)

    def check_schema(self, ds: Dataset) -> None:
        if ds.schema_fingerprint() != self.fingerprint:
            raise SchemaMismatch("dataset schema does not match the training schema")

    def to_dict(self) -> dict:
        raise NotImplementedError


def predict_proba(model: Model, ds: Dataset, rows=None) -> np.ndarray:
    """Schema-checked prediction for rows of a dataset (all rows by default)."""
    model.check_schema(ds)
    X = ds.values if rows is None else np.atleast_2d(ds.values[rows])
    return model.predict_proba_batch(X)


def _check_trainable(ds: Dataset) -> None:
    if ds.n < 2:
        raise ModelError("need at least two training instances")
    if len(np.unique(ds.labels)) < 2:
        raise ModelError("training data contains a single class")


# ---------------------------------------------------------------------------
# array-backed binary trees (random forest)

class _Tree:
    """Flat-array binary tree. Numeric splits are x <= thr, nominal splits are
    one-vs-rest equality x == thr."""

    __slots__ = ("feature", "thr", "is_eq", "left", "right", "dist")

    def __init__(self):
        self.feature: list[int] = []
        self.thr: list[float] = []
        self.is_eq: list[bool] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.dist: list[np.ndarray | None] = []

    def add_node(self):
        self.feature.append(-1)
        self.thr.append(0.0)
        self.is_eq.append(False)
        self.left.append(-1)
        self.right.append(-1)
        self.dist.append(None)
        return len(self.feature) - 1

    def finalize(self, n_classes):
        self.feature = np.asarray(self.feature, dtype=np.int32)
        self.thr = np.asarray(self.thr, dtype=np.float64)
        self.is_eq = np.asarray(self.is_eq, dtype=bool)
        self.left = np.asarray(self.left, dtype=np.int32)
        self.right = np.asarray(self.right, dtype=np.int32)
        dists = np.zeros((len(self.feature), n_classes))
        for i, d in enumerate(self.dist):
            if d is not None:
                dists[i] = d
        self.dist = dists

    def apply(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.int32)
        while True:
            internal = self.feature[node] >= 0
            if not internal.any():
                return node
            idx = np.nonzero(internal)[0]
            cur = node[idx]
            f = self.feature[cur]
            xv = X[idx, f]
            go_left = np.where(self.is_eq[cur], xv == self.thr[cur], xv <= self.thr[cur])
            node[idx] = np.where(go_left, self.left[cur], self.right[cur])


def _gini_best_split(X, y, rows, attr_ids, attrs, n_classes, min_leaf):
    """Best (weighted-gini) binary split among candidate attributes.

    Returns (attr, thr, is_eq, left_rows, right_rows) or None. Zero-gain
    splits are allowed as long as both sides are non-empty; recursion still
    terminates because children are strictly smaller.
    """
    k = rows.size
    ysub = y[rows]
    best = None
    best_score = math.inf
    for a in attr_ids:
        col = X[rows, a]
        if attrs[a].is_nominal:
            vals = col.astype(np.int64)
            dom = attrs[a].domain_size
            contingency = np.zeros((dom, n_classes), dtype=np.int64)
            np.add.at(contingency, (vals, ysub), 1)
            totals = contingency.sum(axis=1)
            total_counts = contingency.sum(axis=0)
            for v in range(dom):
                nl = totals[v]
                if nl < min_leaf or k - nl < min_leaf or nl == 0 or nl == k:
                    continue
                lc = contingency[v]
                rc = total_counts - lc
                score = _weighted_gini(lc, nl, rc, k - nl)
                if score < best_score - 1e-12:
                    best_score = score
                    best = (a, float(v), True)
        else:
            order = np.argsort(col, kind="stable")
            xs = col[order]
            yo = ysub[order]
            distinct = np.nonzero(xs[1:] != xs[:-1])[0]  # split after these positions
            if distinct.size == 0:
                continue
            onehot = np.zeros((k, n_classes), dtype=np.int64)
            onehot[np.arange(k), yo] = 1
            cum = np.cumsum(onehot, axis=0)
            total = cum[-1]
            lc = cum[distinct]
            nl = distinct + 1
            nr = k - nl
            ok = (nl >= min_leaf) & (nr >= min_leaf)
            if not ok.any():
                continue
            rc = total - lc
            gl = 1.0 - ((lc / nl[:, None]) ** 2).sum(axis=1)
            gr = 1.0 - ((rc / nr[:, None]) ** 2).sum(axis=1)
            scores = (nl * gl + nr * gr) / k
            scores[~ok] = math.inf
            i = int(scores.argmin())
            if scores[i] < best_score - 1e-12:
                best_score = scores[i]
                thr = (xs[distinct[i]] + xs[distinct[i] + 1]) / 2.0
                best = (a, float(thr), False)
    if best is None:
        return None
    a, thr, is_eq = best
    col = X[rows, a]
    mask = (col == thr) if is_eq else (col <= thr)
    return a, thr, is_eq, rows[mask], rows[~mask]


def _weighted_gini(lc, nl, rc, nr):
    gl = 1.0 - ((lc / nl) ** 2).sum()
    gr = 1.0 - ((rc / nr) ** 2).sum()
    return (nl * gl + nr * gr) / (nl + nr)


class RandomForest(Model):
    kind = "forest"

    def __init__(self, trees, n_classes, fingerprint, params, oob_accuracy=None):
        super().__init__(n_classes, fingerprint)
        self.trees = trees
        self.params = params
        self.oob_accuracy = oob_accuracy

    def predict_proba_batch(self, X):
        X = np.asarray(X, dtype=np.float64)
        acc = np.zeros((X.shape[0], self.n_classes))
        for t in self.trees:
            acc += t.dist[t.apply(X)]
        acc /= len(self.trees)
        return acc

    def to_dict(self):
        return {
            "format": 1,
            "type": self.kind,
            "n_classes": self.n_classes,
            "fingerprint": self.fingerprint,
            "oob_accuracy": self.oob_accuracy,
            "trees": [
                {
                    "feature": t.feature.tolist(),
                    "thr": t.thr.tolist(),
                    "is_eq": t.is_eq.tolist(),
                    "left": t.left.tolist(),
                    "right": t.right.tolist(),
                    "dist": t.dist.tolist(),
                }
                for t in self.trees
            ],
        }

    @classmethod
    def from_dict(cls, d):
        trees = []
        for td in d["trees"]:
            t = _Tree()
            t.feature = np.asarray(td["feature"], dtype=np.int32)
            t.thr = np.asarray(td["thr"], dtype=np.float64)
            t.is_eq = np.asarray(td["is_eq"], dtype=bool)
            t.left = np.asarray(td["left"], dtype=np.int32)
            t.right = np.asarray(td["right"], dtype=np.int32)
            t.dist = np.asarray(td["dist"], dtype=np.float64)
            trees.append(t)
        return cls(trees, d["n_classes"], d["fingerprint"], None, d.get("oob_accuracy"))


def train_random_forest(ds: Dataset, params: ForestParams | None = None) -> RandomForest:
    params = params or ForestParams()
    _check_trainable(ds)
    X, y = ds.values, ds.labels
    n, m = ds.n, ds.m
    C = ds.n_classes
    k_feats = params.features_per_split or max(1, math.ceil(math.sqrt(m)))
    k_feats = min(k_feats, m)
    seed = params.seed if params.seed is not None else 0
    tree_seeds = np.random.SeedSequence([seed, 314159]).spawn(params.tree_count)
    max_depth = params.max_depth if params.max_depth is not None else 10**9

    trees = []
    oob_votes = np.zeros((n, C))
    old_limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old_limit, 20000))
    for ss in tree_seeds:
        rng = np.random.default_rng(ss)
        boot = rng.integers(0, n, size=n)
        tree = _Tree()

        def build(rows, depth):
            node = tree.add_node()
            counts = np.bincount(y[rows], minlength=C)
            if (counts > 0).sum() <= 1 or rows.size < 2 or depth >= max_depth:
                tree.dist[node] = counts / counts.sum()
                return node
            cand = rng.permutation(m)[:k_feats] if k_feats < m else np.arange(m)
            split = _gini_best_split(X, y, rows, cand, ds.attributes, C, params.min_leaf)
            if split is None:
                tree.dist[node] = counts / counts.sum()
                return node
            a, thr, is_eq, lrows, rrows = split
            tree.feature[node] = a
            tree.thr[node] = thr
            tree.is_eq[node] = is_eq
            tree.left[node] = build(lrows, depth + 1)
            tree.right[node] = build(rrows, depth + 1)
            return node

        build(boot, 0)
        tree.finalize(C)
        trees.append(tree)
        oob = np.setdiff1d(np.arange(n), boot, assume_unique=False)
        if oob.size:
            oob_votes[oob] += tree.dist[tree.apply(X[oob])]
    sys.setrecursionlimit(old_limit)

    voted = oob_votes.sum(axis=1) > 0
    oob_acc = None
    if voted.any():
        oob_acc = float((oob_votes[voted].argmax(axis=1) == y[voted]).mean())
    return RandomForest(trees, C, ds.schema_fingerprint(), params, oob_acc)


# ---------------------------------------------------------------------------
# gain-ratio decision tree with pessimistic pruning

@dataclass(frozen=True)
class TreeParams:
    min_leaf: int = 2
    pruning: bool = True
    confidence: float = 0.25


class _DTNode:
    __slots__ = ("attr", "thr", "children", "dist", "n")

    def __init__(self, dist, n):
        self.attr = -1
        self.thr = 0.0
        self.children: list[_DTNode] | dict[int, _DTNode] | None = None
        self.dist = dist
        self.n = n


def _entropy(counts) -> float:
    tot = counts.sum()
    if tot == 0:
        return 0.0
    p = counts[counts > 0] / tot
    return float(-(p * np.log2(p)).sum())


class DecisionTree(Model):
    kind = "tree"

    def __init__(self, root, n_classes, fingerprint, attrs):
        super().__init__(n_classes, fingerprint)
        self.root = root
        self._nominal = np.array([a.is_nominal for a in attrs])

    def predict_proba_batch(self, X):
        X = np.asarray(X, dtype=np.float64)
        out = np.empty((X.shape[0], self.n_classes))
        for i in range(X.shape[0]):
            out[i] = self._walk(X[i])
        return out

    def _walk(self, x):
        node = self.root
        while node.children is not None:
            if isinstance(node.children, dict):
                child = node.children.get(int(x[node.attr]))
                if child is None:
                    break  # value unseen in this subtree
                node = child
            else:
                node = node.children[0] if x[node.attr] <= node.thr else node.children[1]
        return node.dist

    def depth(self) -> int:
        def rec(node):
            if node.children is None:
                return 0
            kids = node.children.values() if isinstance(node.children, dict) else node.children
            return 1 + max(rec(c) for c in kids)

        return rec(self.root)

    def to_dict(self):
        def enc(node):
            d = {"dist": node.dist.tolist(), "n": node.n}
            if node.children is not None:
                d["attr"] = node.attr
                if isinstance(node.children, dict):
                    d["branches"] = {str(v): enc(c) for v, c in node.children.items()}
                else:
                    d["thr"] = node.thr
                    d["le"] = enc(node.children[0])
                    d["gt"] = enc(node.children[1])
            return d

        return {"format": 1, "type": self.kind, "n_classes": self.n_classes,
                "fingerprint": self.fingerprint, "nominal": self._nominal.tolist(),
                "root": enc(self.root)}

    @classmethod
    def from_dict(cls, d):
        def dec(nd):
            node = _DTNode(np.asarray(nd["dist"]), nd["n"])
            if "attr" in nd:
                node.attr = nd["attr"]
                if "branches" in nd:
                    node.children = {int(v): dec(c) for v, c in nd["branches"].items()}
                else:
                    node.thr = nd["thr"]
                    node.children = [dec(nd["le"]), dec(nd["gt"])]
            return node

        tree = cls.__new__(cls)
        Model.__init__(tree, d["n_classes"], d["fingerprint"])
        tree.root = dec(d["root"])
        tree._nominal = np.asarray(d["nominal"], dtype=bool)
        return tree


def train_decision_tree(ds: Dataset, params: TreeParams | None = None) -> DecisionTree:
    params = params or TreeParams()
    _check_trainable(ds)
    X, y, C = ds.values, ds.labels, ds.n_classes
    attrs = ds.attributes
    min_leaf = params.min_leaf

    def leaf(counts, n):
        node = _DTNode(counts / max(counts.sum(), 1), n)
        return node

    def build(rows):
        counts = np.bincount(y[rows], minlength=C)
        node = leaf(counts, rows.size)
        if (counts > 0).sum() <= 1 or rows.size < 2 * min_leaf:
            return node
        parent_info = _entropy(counts)
        candidates = []  # (gain, gain_ratio, attr, thr_or_None, partition)
        for a in range(ds.m):
            col = X[rows, a]
            if attrs[a].is_nominal:
                vals = col.astype(np.int64)
                dom = attrs[a].domain_size
                contingency = np.zeros((dom, C), dtype=np.int64)
                np.add.at(contingency, (vals, y[rows]), 1)
                sizes = contingency.sum(axis=1)
                present = sizes > 0
                if present.sum() < 2 or (sizes >= min_leaf).sum() < 2:
                    continue
                info = sum(sizes[v] / rows.size * _entropy(contingency[v])
                           for v in range(dom) if present[v])
                gain = parent_info - info
                split_info = _entropy(sizes[present])
                if gain <= 1e-10 or split_info <= 1e-10:
                    continue
                candidates.append((gain, gain / split_info, a, None, None))
            else:
                order = np.argsort(col, kind="stable")
                xs = col[order]
                yo = y[rows][order]
                distinct = np.nonzero(xs[1:] != xs[:-1])[0]
                if distinct.size == 0:
                    continue
                onehot = np.zeros((rows.size, C), dtype=np.int64)
                onehot[np.arange(rows.size), yo] = 1
                cum = np.cumsum(onehot, axis=0)
                total = cum[-1]
                lc = cum[distinct]
                nl = distinct + 1
                nr = rows.size - nl
                ok = (nl >= min_leaf) & (nr >= min_leaf)
                if not ok.any():
                    continue
                rc = total - lc
                il = _entropy_rows(lc)
                ir = _entropy_rows(rc)
                info = (nl * il + nr * ir) / rows.size
                gains = parent_info - info
                gains[~ok] = -math.inf
                i = int(gains.argmax())
                # charge the threshold choice, as C4.5 does for numeric splits
                gain = gains[i] - math.log2(distinct.size) / rows.size
                if gain <= 1e-10:
                    continue
                frac = nl[i] / rows.size
                split_info = _entropy(np.array([nl[i], nr[i]]))
                if split_info <= 1e-10:
                    continue
                thr = (xs[distinct[i]] + xs[distinct[i] + 1]) / 2.0
                candidates.append((gain, gain / split_info, a, thr, frac))
        if not candidates:
            return node
        avg_gain = sum(c[0] for c in candidates) / len(candidates)
        eligible = [c for c in candidates if c[0] >= avg_gain - 1e-12]
        best = max(eligible, key=lambda c: c[1])
        _, _, a, thr, _ = best
        node.attr = a
        col = X[rows, a]
        if thr is None:
            node.children = {}
            vals = col.astype(np.int64)
            for v in range(attrs[a].domain_size):
                sub = rows[vals == v]
                if sub.size:
                    node.children[v] = build(sub)
        else:
            node.thr = thr
            node.children = [build(rows[col <= thr]), build(rows[col > thr])]
        return node

    root = build(np.arange(ds.n))
    if params.pruning:
        z = NormalDist().inv_cdf(1.0 - params.confidence)
        _prune(root, z)
    return DecisionTree(root, C, ds.schema_fingerprint(), attrs)


def _entropy_rows(count_rows):
    tot = count_rows.sum(axis=1, keepdims=True).astype(np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = count_rows / tot
        logp = np.where(p > 0, np.log2(np.where(p > 0, p, 1.0)), 0.0)
    return -(p * logp).sum(axis=1)


def _pessimistic_errors(n, errors, z) -> float:
    """C4.5's upper confidence bound on the error count of a leaf."""
    if n == 0:
        return 0.0
    f = errors / n
    num = f + z * z / (2 * n) + z * math.sqrt(max(f / n - f * f / n + z * z / (4 * n * n), 0.0))
    return n * (num / (1 + z * z / n))


def _prune(node, z) -> float:
    n = node.n
    leaf_errors = n - node.dist.max() * n
    leaf_est = _pessimistic_errors(n, leaf_errors, z)
    if node.children is None:
        return leaf_est
    kids = node.children.values() if isinstance(node.children, dict) else node.children
    subtree_est = sum(_prune(c, z) for c in kids)
    if leaf_est <= subtree_est + 0.1:
        node.children = None
        return leaf_est
    return subtree_est


# ---------------------------------------------------------------------------
# naive Bayes

class NaiveBayes(Model):
    kind = "bayes"

    def __init__(self, log_priors, nominal_tables, gauss, fingerprint, attrs):
        super().__init__(len(log_priors), fingerprint)
        self.log_priors = log_priors
        self.nominal_tables = nominal_tables  # attr -> (V, C) log P(v | c)
        self.gauss = gauss  # attr -> (mean[C], var[C])
        self._nominal = np.array([a.is_nominal for a in attrs])

    def predict_proba_batch(self, X):
        X = np.asarray(X, dtype=np.float64)
        n = X.shape[0]
        log_post = np.tile(self.log_priors, (n, 1))
        for a, table in self.nominal_tables.items():
            codes = X[:, a].astype(np.int64)
            codes = np.clip(codes, 0, table.shape[0] - 1)
            log_post += table[codes]
        for a, (mean, var) in self.gauss.items():
            diff = X[:, a][:, None] - mean[None, :]
            log_post += -0.5 * (np.log(2 * math.pi * var)[None, :] + diff * diff / var[None, :])
        log_post -= log_post.max(axis=1, keepdims=True)
        p = np.exp(log_post)
        return p / p.sum(axis=1, keepdims=True)

    def to_dict(self):
        return {
            "format": 1,
            "type": self.kind,
            "fingerprint": self.fingerprint,
            "log_priors": self.log_priors.tolist(),
            "nominal": {str(a): t.tolist() for a, t in self.nominal_tables.items()},
            "gauss": {str(a): [m.tolist(), v.tolist()] for a, (m, v) in self.gauss.items()},
            "is_nominal": self._nominal.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        nb = cls.__new__(cls)
        Model.__init__(nb, len(d["log_priors"]), d["fingerprint"])
        nb.log_priors = np.asarray(d["log_priors"])
        nb.nominal_tables = {int(a): np.asarray(t) for a, t in d["nominal"].items()}
        nb.gauss = {int(a): (np.asarray(m), np.asarray(v)) for a, (m, v) in d["gauss"].items()}
        nb._nominal = np.asarray(d["is_nominal"], dtype=bool)
        return nb


def train_naive_bayes(ds: Dataset) -> NaiveBayes:
    X, y, C = ds.values, ds.labels, ds.n_classes
    counts = np.bincount(y, minlength=C)
    if (counts == 0).any():
        raise ModelError("every class needs at least one training instance")
    log_priors = np.log((counts + 1) / (ds.n + C))
    nominal_tables = {}
    gauss = {}
    for a, desc in enumerate(ds.attributes):
        if desc.is_nominal:
            V = desc.domain_size
            table = np.zeros((V, C))
            np.add.at(table, (X[:, a].astype(np.int64), y), 1)
            table = np.log((table + 1) / (counts[None, :] + V))
            nominal_tables[a] = table
        else:
            mean = np.empty(C)
            var = np.empty(C)
            spread = max(float(X[:, a].max() - X[:, a].min()), 1e-6)
            for c in range(C):
                col = X[y == c, a]
                mean[c] = col.mean()
                var[c] = max(col.var(), (1e-3 * spread) ** 2)
            gauss[a] = (mean, var)
    return NaiveBayes(log_priors, nominal_tables, gauss, ds.schema_fingerprint(), ds.attributes)


# ---------------------------------------------------------------------------
# serialization

_MODEL_TYPES = {"forest": RandomForest, "tree": DecisionTree, "bayes": NaiveBayes}


def save_model(model: Model, path) -> None:
    with open(path, "w") as fh:
        json.dump(model.to_dict(), fh)


def load_model(path) -> Model:
    with open(path) as fh:
        d = json.load(fh)
    if d.get("format") != 1:
        raise DataError(f"unsupported model format {d.get('format')!r}")
    try:
        cls = _MODEL_TYPES[d["type"]]
    except KeyError:
        raise DataError(f"unknown model type {d.get('type')!r}") from None
    return cls.from_dict(d)
