"""Random forest classifier, written out in full.

CART trees on Gini impurity with midpoint thresholds, bagged over bootstrap
resamples with per-node feature subsampling. Everything that involves chance
draws from per-tree generators seeded by mix_seed(seed, tree_index), so
training is deterministic for a given (dataset order, params) and trees could
be grown in parallel without changing the result.

Tie-breaking is fixed everywhere (lower feature index, lower threshold, lower
label index, fewer trees, shallower depth) so repeated runs agree bit for bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .glyph import LABELS, LABEL_INDEX
from .seeds import mix_seed
from .synth import Dataset

N_CLASSES = len(LABELS)
MODEL_VERSION = 1


class EmptyCounts(Exception):
    """Gini impurity of an empty node is undefined."""


class MissingClass(Exception):
    """Training data must contain every label."""


class TooFewPerClass(Exception):
    """Stratified folding needs at least k samples of every class."""


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    max_depth: int = 3
    min_leaf: int = 1
    features_per_split: int = 6  # ceil(sqrt(30))
    seed: int = 0

    def __post_init__(self) -> None:
        if min(self.n_trees, self.max_depth, self.min_leaf, self.features_per_split) < 1:
            raise ValueError("all forest parameters must be positive")
        if self.features_per_split > 30:
            raise ValueError("features_per_split must be <= 30")


@dataclass(frozen=True)
class Leaf:
    class_counts: np.ndarray  # (N_CLASSES,) int64

    @property
    def vote(self) -> int:
        return int(np.argmax(self.class_counts))  # argmax ties -> lower label index


@dataclass(frozen=True)
class Split:
    feature_index: int
    threshold: float
    left: "TreeNode"
    right: "TreeNode"


TreeNode = Leaf | Split


@dataclass(frozen=True)
class RandomForestModel:
    trees: tuple[TreeNode, ...]
    params: ForestParams
    label_order: tuple[str, ...] = LABELS


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    precision_macro: float
    recall_macro: float
    confusion: np.ndarray  # (5, 5) int64, rows true / cols predicted


@dataclass(frozen=True)
class GridSearchResult:
    scores: tuple[tuple[int, int, float], ...]  # (n_trees, max_depth, mean CV accuracy)
    best_n_trees: int
    best_max_depth: int
    best_score: float


def gini(class_counts: np.ndarray | list[int]) -> float:
    """Gini impurity 1 - sum((c_i / N)^2); in [0, 0.8] for five classes."""
    counts = np.asarray(class_counts)
    total = int(counts.sum())
    if total == 0:
        raise EmptyCounts("all class counts are zero")
    acc = 0.0
    for c in counts:  # fixed summation order keeps runs bit-identical
        p = float(c) / total
        acc += p * p
    return 1.0 - acc


def _class_counts(y: np.ndarray) -> np.ndarray:
    return np.bincount(y, minlength=N_CLASSES).astype(np.int64)


def best_split(
    X: np.ndarray, y: np.ndarray, candidate_features: list[int] | np.ndarray
) -> tuple[int, float, float] | None:
    """Best (feature, threshold, impurity decrease) over the candidates.

    Thresholds sit at midpoints between consecutive distinct sorted values of
    a feature. The split maximizing the decrease wins; ties go to the lower
    feature index, then the lower threshold. Returns None when fewer than two
    samples or when no split strictly decreases the weighted impurity.
    """
    m = len(y)
    if m < 2:
        return None
    parent = gini(_class_counts(y))

    best: tuple[float, int, float] | None = None  # (decrease, feature, threshold)
    for f in sorted(int(f) for f in candidate_features):
        values = X[:, f]
        order = np.argsort(values, kind="stable")
        sv = values[order]
        sy = y[order]
        distinct = sv[1:] > sv[:-1]
        if not distinct.any():
            continue

        # prefix[i, c] = count of class c among the first i+1 sorted samples
        onehot = sy[:, None] == np.arange(N_CLASSES)[None, :]
        prefix = np.cumsum(onehot, axis=0).astype(np.float64)
        total = prefix[-1]

        idx = np.nonzero(distinct)[0]  # split after sorted position i
        n_left = (idx + 1).astype(np.float64)
        n_right = m - n_left
        left = prefix[idx]
        right = total[None, :] - left

        # class-by-class accumulation mirrors gini()'s summation order exactly
        sum_left = np.zeros(len(idx))
        sum_right = np.zeros(len(idx))
        for c in range(N_CLASSES):
            pl = left[:, c] / n_left
            pr = right[:, c] / n_right
            sum_left = sum_left + pl * pl
            sum_right = sum_right + pr * pr
        weighted = (n_left * (1.0 - sum_left) + n_right * (1.0 - sum_right)) / m
        decrease = parent - weighted

        pos = int(np.argmax(decrease))  # first max -> lowest threshold
        if decrease[pos] > 0.0 and (best is None or decrease[pos] > best[0]):
            i = int(idx[pos])
            threshold = (sv[i] + sv[i + 1]) / 2.0
            best = (float(decrease[pos]), f, float(threshold))

    if best is None:
        return None
    dec, f, thr = best
    return f, thr, dec


def grow_tree(
    X: np.ndarray, y: np.ndarray, params: ForestParams, rng: np.random.Generator
) -> TreeNode:
    """Recursive CART. The rng is consumed depth-first (node, left, right):
    one draw of candidate features per split attempt.

    Stops on max depth, purity, fewer than 2*min_leaf samples, or when no
    split has positive gain.
    """
    n_features = X.shape[1]
    k = min(params.features_per_split, n_features)

    def grow(idx: np.ndarray, depth: int) -> TreeNode:
        counts = _class_counts(y[idx])
        if (
            depth >= params.max_depth
            or np.count_nonzero(counts) <= 1
            or len(idx) < 2 * params.min_leaf
        ):
            return Leaf(counts)
        candidates = rng.choice(n_features, size=k, replace=False)
        found = best_split(X[idx], y[idx], candidates)
        if found is None:
            return Leaf(counts)
        f, thr, _ = found
        mask = X[idx, f] <= thr
        return Split(f, thr, grow(idx[mask], depth + 1), grow(idx[~mask], depth + 1))

    return grow(np.arange(len(y)), 0)


def tree_depth(node: TreeNode) -> int:
    if isinstance(node, Leaf):
        return 0
    return 1 + max(tree_depth(node.left), tree_depth(node.right))


def _leaf_for(node: TreeNode, x: np.ndarray) -> Leaf:
    while isinstance(node, Split):
        node = node.left if x[node.feature_index] <= node.threshold else node.right
    return node


def forest_fit(ds: Dataset, params: ForestParams) -> RandomForestModel:
    """Bag n_trees CART trees over bootstrap resamples of the dataset.

    Tree i draws its bootstrap indices and then its node features from a
    generator seeded with mix_seed(params.seed, i).
    """
    X, y = ds.matrix()
    present = set(int(v) for v in np.unique(y))
    missing = [LABELS[i] for i in range(N_CLASSES) if i not in present]
    if missing:
        raise MissingClass(f"dataset lacks label(s) {missing}")

    trees = []
    n = len(y)
    for i in range(params.n_trees):
        rng = np.random.default_rng(mix_seed(params.seed, i))
        boot = rng.integers(0, n, size=n)
        trees.append(grow_tree(X[boot], y[boot], params, rng))
    return RandomForestModel(trees=tuple(trees), params=params)


def forest_predict(model: RandomForestModel, features: np.ndarray) -> tuple[str, np.ndarray]:
    """Majority vote over tree leaves; posteriors are the vote fractions."""
    x = np.asarray(features, dtype=np.float64)
    votes = np.zeros(N_CLASSES, dtype=np.int64)
    for tree in model.trees:
        votes[_leaf_for(tree, x).vote] += 1
    posteriors = votes / len(model.trees)
    return model.label_order[int(np.argmax(posteriors))], posteriors


def stratified_kfold(ds: Dataset, k: int, seed: int) -> list[np.ndarray]:
    """k disjoint index folds preserving class proportions.

    Per class (canonical label order), indices are shuffled with the seeded
    generator and dealt round-robin, so per-fold class counts differ from the
    ideal by at most one.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    _, y = ds.matrix()
    rng = np.random.default_rng(seed)
    folds: list[list[int]] = [[] for _ in range(k)]
    for ci in range(N_CLASSES):
        idx = np.nonzero(y == ci)[0]
        if 0 < len(idx) < k:
            raise TooFewPerClass(f"class {LABELS[ci]} has {len(idx)} samples, need >= {k}")
        rng.shuffle(idx)
        for j, sample in enumerate(idx):
            folds[j % k].append(int(sample))
    return [np.array(sorted(f), dtype=np.int64) for f in folds]


def _subset(ds: Dataset, indices: np.ndarray) -> Dataset:
    return Dataset(samples=tuple(ds.samples[i] for i in indices))


def _accuracy(model: RandomForestModel, ds: Dataset) -> float:
    X, y = ds.matrix()
    hits = sum(
        1 for i in range(len(y)) if LABEL_INDEX[forest_predict(model, X[i])[0]] == y[i]
    )
    return hits / len(y)


def grid_search(
    ds: Dataset,
    trees_grid: list[int],
    depth_grid: list[int],
    k: int = 5,
    seed: int = 0,
) -> GridSearchResult:
    """Mean k-fold CV accuracy for every (n_trees, max_depth) combination.

    All configurations share one folding. The best configuration has the
    highest mean accuracy; ties prefer fewer trees, then a shallower depth.
    """
    if not trees_grid or not depth_grid:
        raise ValueError("grids must be non-empty")
    folds = stratified_kfold(ds, k, seed)
    all_idx = np.arange(len(ds.samples))

    scores: list[tuple[int, int, float]] = []
    best: tuple[int, int, float] | None = None
    for n_trees in trees_grid:
        for depth in depth_grid:
            accs = []
            for fi, fold in enumerate(folds):
                train_idx = np.setdiff1d(all_idx, fold)
                params = ForestParams(
                    n_trees=n_trees,
                    max_depth=depth,
                    seed=mix_seed(seed, n_trees, depth, fi),
                )
                model = forest_fit(_subset(ds, train_idx), params)
                accs.append(_accuracy(model, _subset(ds, fold)))
            mean = float(np.mean(accs))
            scores.append((n_trees, depth, mean))
            if (
                best is None
                or mean > best[2]
                or (mean == best[2] and (n_trees, depth) < (best[0], best[1]))
            ):
                best = (n_trees, depth, mean)

    assert best is not None
    return GridSearchResult(
        scores=tuple(scores),
        best_n_trees=best[0],
        best_max_depth=best[1],
        best_score=best[2],
    )


def evaluate(model: RandomForestModel, test: Dataset) -> Metrics:
    """Confusion matrix plus accuracy and macro precision/recall.

    A class never predicted contributes 0 precision to the macro average;
    a class absent from the test set contributes 0 recall.
    """
    X, y = test.matrix()
    if len(y) == 0:
        raise ValueError("test set is empty")
    confusion = np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64)
    for i in range(len(y)):
        pred, _ = forest_predict(model, X[i])
        confusion[y[i], LABEL_INDEX[pred]] += 1

    accuracy = float(np.trace(confusion) / confusion.sum())
    precisions, recalls = [], []
    for c in range(N_CLASSES):
        tp = confusion[c, c]
        pred_c = confusion[:, c].sum()
        true_c = confusion[c, :].sum()
        precisions.append(float(tp / pred_c) if pred_c else 0.0)
        recalls.append(float(tp / true_c) if true_c else 0.0)
    return Metrics(
        accuracy=accuracy,
        precision_macro=float(np.mean(precisions)),
        recall_macro=float(np.mean(recalls)),
        confusion=confusion,
    )


def _node_to_json(node: TreeNode) -> dict:
    if isinstance(node, Leaf):
        return {"leaf": [int(c) for c in node.class_counts]}
    return {
        "f": node.feature_index,
        "t": node.threshold,
        "l": _node_to_json(node.left),
        "r": _node_to_json(node.right),
    }


def _node_from_json(obj: dict) -> TreeNode:
    if "leaf" in obj:
        counts = np.asarray(obj["leaf"], dtype=np.int64)
        if counts.shape != (N_CLASSES,) or counts.sum() == 0:
            raise ValueError(f"bad leaf counts {obj['leaf']!r}")
        return Leaf(counts)
    return Split(
        feature_index=int(obj["f"]),
        threshold=float(obj["t"]),
        left=_node_from_json(obj["l"]),
        right=_node_from_json(obj["r"]),
    )


def save_model(model: RandomForestModel, path: str) -> None:
    doc = {
        "version": MODEL_VERSION,
        "params": {
            "n_trees": model.params.n_trees,
            "max_depth": model.params.max_depth,
            "min_leaf": model.params.min_leaf,
            "features_per_split": model.params.features_per_split,
            "seed": model.params.seed,
        },
        "labels": list(model.label_order),
        "trees": [_node_to_json(t) for t in model.trees],
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f)
        f.write("\n")


def load_model(path: str) -> RandomForestModel:
    with open(path, "r", encoding="utf-8") as f:
        doc = json.load(f)
    if doc.get("version") != MODEL_VERSION:
        raise ValueError(f"unsupported model version {doc.get('version')!r}")
    params = ForestParams(**doc["params"])
    trees = tuple(_node_from_json(t) for t in doc["trees"])
    if len(trees) != params.n_trees:
        raise ValueError("tree count does not match params.n_trees")
    return RandomForestModel(trees=trees, params=params, label_order=tuple(doc["labels"]))
