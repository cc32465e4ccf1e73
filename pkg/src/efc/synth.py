"""Seeded generators for the benchmark's synthetic classification datasets."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import NOMINAL, NUMERIC, AttributeDescriptor, DataError, Dataset

BINARY = ("0", "1")
TERNARY = ("0", "1", "2")


def _nom(names, domain=BINARY):
    return [(n, NOMINAL, domain) for n in names]


def _num(names):
    return [(n, NUMERIC, None) for n in names]


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for one synthetic dataset: name, size, seed, optional noise override."""

    name: str
    n: int = 2000
    seed: int = 0
    noise_percent: float | None = None  # None = the dataset's own default

    def resolved_noise(self) -> float:
        if self.noise_percent is not None:
            return self.noise_percent
        return _GENERATORS[self.name].noise


class _Gen:
    def __init__(self, schema, classes, concept, noise=0.0):
        self.schema = schema  # list of (name, kind, domain)
        self.classes = classes
        self.concept = concept
        self.noise = noise


def _logical_conc_b(v):
    a1, a2, a3, a4, a5, a6 = v[0] == 1, v[1] == 1, v[2] == 1, v[3] == 1, v[4] == 1, v[5] == 1
    if not a2:
        return int(a1 and not a3)
    return int((a4 and a5) or a6)


def _bin_class_dis_attr(v):
    a1, a2, a3, a4 = int(v[0]), int(v[1]), int(v[2]), int(v[3])
    if a1 == 2:
        return int(a2 == 0 and a3 == 1)
    if a1 == 1:
        return int(a4 == 2 or a3 == 2 or a2 != a1)
    return int(a4 == 0)


def _bin_class_num_bin_attr(v):
    a1, a2, a3, a4 = v[0], v[1], v[2], v[3]
    if a1 == 0:
        return int(a3 > 0.3 and a4 < 0.1)
    return int(a2 == 0 and a3 > 0.7)


def _bin_class_num_dis_attr(v):
    a1, a2, a3, a4 = int(v[0]), int(v[1]), v[2], v[3]
    if a2 == 0:
        return int(a3 < 0.5 and a1 == 0)
    if a2 == 1:
        return int(a4 > 0.15 and a1 == 2)
    return int(a3 > 0.5 and a4 > 0.5 and a1 == 1)


def _disjunct_n(v):
    return int(v[0] > 0.5 or v[1] > 0.7 or v[2] < 0.4)


def _multi_v_class_dis_attr(v):
    a1, a2, a3, a4 = int(v[0]), int(v[1]), int(v[2]), int(v[3])
    if a1 == 2:
        return 1 if (a2 == 0 and a3 == 1) else 0
    if a1 == 1:
        return 2 if (a4 == 2 or a3 == 2 or a2 != a1) else 1
    return 2 if a4 == 0 else 0


def _concept(v):
    a1, a2, a3, a4 = int(v[0]), int(v[1]), int(v[2]), int(v[3])
    if a2 == 0:
        return int(a1 == 1 and a3 == 0 and a3 == a4)
    return int(a1 == a4)


def grid_cell(x: float) -> int:
    """Map a coordinate in [0, 1] to its third of the unit interval."""
    return min(int(x * 3), 2)


def grid_class(x: float, y: float) -> int:
    """Class layout of the 3x3 unit-square grid: constant along main diagonals.

    Every grid row and column contains all three classes, so no single
    coordinate carries class information on its own.
    """
    return (grid_cell(y) - grid_cell(x)) % 3


def _mod_groups(v):
    return grid_class(v[0], v[1])


def _cond_ind(v):
    # label generated first; attribute agreement handled by the generator
    raise NotImplementedError


def _toy(v):
    a1, a2, a3, a4, a5 = v[0] == 1, v[1] == 1, v[2] == 1, v[3] == 1, v[4] == 1
    if not a1:
        return int(a2 and a3)
    return int(a4 and a5)


def _tictactoe(v):
    return int(v[3] == v[4] == v[5])


_GENERATORS: dict[str, _Gen] = {
    "LogicalConcB": _Gen(_nom([f"A{i}" for i in range(1, 8)]), BINARY, _logical_conc_b),
    "LogicalConcBNoisy": _Gen(_nom([f"A{i}" for i in range(1, 8)]), BINARY,
                              _logical_conc_b, noise=5.0),
    "BinClassDisAttr": _Gen(_nom([f"A{i}" for i in range(1, 6)], TERNARY), BINARY,
                            _bin_class_dis_attr),
    "BinClassNumBinAttr": _Gen(_nom(["A1", "A2"]) + _num(["A3", "A4", "A5"]), BINARY,
                               _bin_class_num_bin_attr),
    "BinClassNumDisAttr": _Gen(_nom(["A1", "A2"], TERNARY) + _num(["A3", "A4", "A5"]),
                               BINARY, _bin_class_num_dis_attr),
    "DisjunctN": _Gen(_num([f"A{i}" for i in range(1, 6)]), BINARY, _disjunct_n),
    "MultiVClassDisAttr": _Gen(_nom([f"A{i}" for i in range(1, 6)], TERNARY), TERNARY,
                               _multi_v_class_dis_attr),
    "Concept": _Gen(_nom([f"A{i}" for i in range(1, 6)]), BINARY, _concept),
    "ModGroups": _Gen(_num(["I1", "I2", "R1", "R2"]), TERNARY, _mod_groups, noise=10.0),
    "CondInd": _Gen(_nom(["I90", "I80", "I70", "I60", "R1", "R2", "R3", "R4"]), BINARY,
                    _cond_ind),
    "Toy": _Gen(_nom([f"A{i}" for i in range(1, 7)]), BINARY, _toy),
    "TicTacToe": _Gen(_nom([f"A{i}" for i in range(1, 10)], TERNARY), BINARY, _tictactoe),
}

# attributes with no influence on the class, per dataset definition
UNRELATED_ATTRS: dict[str, tuple[int, ...]] = {
    "LogicalConcB": (6,),
    "LogicalConcBNoisy": (6,),
    "BinClassDisAttr": (4,),
    "BinClassNumBinAttr": (4,),
    "BinClassNumDisAttr": (4,),
    "DisjunctN": (3, 4),
    "MultiVClassDisAttr": (4,),
    "Concept": (4,),
    "ModGroups": (2, 3),
    "CondInd": (4, 5, 6, 7),
    "Toy": (5,),
    "TicTacToe": (0, 1, 2, 6, 7, 8),
}

DATASET_NAMES = tuple(_GENERATORS)


def concept_truth(name: str, vector) -> int:
    """Noise-free class of one attribute vector under the named concept."""
    gen = _lookup(name)
    if name == "CondInd":
        raise DataError("CondInd has no deterministic concept; labels are sampled")
    return gen.concept(np.asarray(vector, dtype=np.float64))


def _lookup(name: str) -> _Gen:
    try:
        return _GENERATORS[name]
    except KeyError:
        raise DataError(f"unknown synthetic dataset {name!r}") from None


def generate(spec: SyntheticSpec) -> Dataset:
    """Generate the named dataset: i.i.d. uniform attributes, concept labels,
    then exact-count label flipping for the dataset's noise percentage.
    """
    gen = _lookup(spec.name)
    if spec.n < 1:
        raise DataError("need at least one instance")
    rng = np.random.default_rng(np.random.SeedSequence([hash_name(spec.name), spec.seed]))
    n, schema = spec.n, gen.schema
    cols = []
    for name, kind, domain in schema:
        if kind == NOMINAL:
            cols.append(rng.integers(0, len(domain), size=n).astype(np.float64))
        else:
            cols.append(rng.uniform(0.0, 1.0, size=n))
    mat = np.column_stack(cols)

    if spec.name == "CondInd":
        labels = rng.integers(0, 2, size=n)
        for j, p in enumerate((0.90, 0.80, 0.70, 0.60)):
            agree = rng.random(n) < p
            mat[:, j] = np.where(agree, labels, 1 - labels).astype(np.float64)
    else:
        labels = np.fromiter((gen.concept(mat[i]) for i in range(n)), dtype=np.int64, count=n)

    noise = spec.resolved_noise()
    if noise > 0:
        flips = round(noise / 100.0 * n)
        chosen = rng.choice(n, size=flips, replace=False)
        n_cls = len(gen.classes)
        shift = rng.integers(1, n_cls, size=flips) if n_cls > 2 else np.ones(flips, dtype=np.int64)
        labels = labels.copy()
        labels[chosen] = (labels[chosen] + shift) % n_cls

    attrs = []
    for idx, (name, kind, domain) in enumerate(schema):
        if kind == NOMINAL:
            attrs.append(AttributeDescriptor(name, idx, NOMINAL, values=domain))
        else:
            col = mat[:, idx]
            attrs.append(AttributeDescriptor(name, idx, NUMERIC,
                                             lo=float(col.min()), hi=float(col.max())))
    class_attr = AttributeDescriptor("class", -1, NOMINAL, values=gen.classes)
    return Dataset(tuple(attrs), class_attr, mat, labels.astype(np.int64), spec.name)


def hash_name(name: str) -> int:
    """Stable 32-bit hash so each dataset name seeds a distinct RNG stream."""
    h = 2166136261
    for ch in name.encode():
        h = ((h ^ ch) * 16777619) & 0xFFFFFFFF
    return h
