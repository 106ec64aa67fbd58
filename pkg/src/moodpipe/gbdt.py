"""Second-order gradient-boosted regression trees with a softmax objective.

Each boosting round fits one tree per class to the gradient/hessian of the
multiclass cross-entropy at the current logits. Splits come from an exact
greedy search over every boundary between distinct feature values, scored by
the regularized second-order gain, and leaves take the Newton-optimal weight
-G/(H+lambda). Validation log-loss drives early stopping.

Model file format "MPG1": the magic, little-endian uint32 version, K,
stored rounds, best_iteration, float64 learning_rate, uint32 feature count,
uint32 label-name count followed by length-prefixed UTF-8 names, then the
trees in (round, class) order. Each tree is a uint32 node count followed by
its nodes in pre-order: flag byte 0 (leaf: float64 weight) or 1 (internal:
uint32 feature, float64 threshold, uint32 left, uint32 right).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numba import njit

from .binio import (
    ByteReader,
    ModelFormatError,
    VersionMismatchError,
    pack_f64,
    pack_str,
    pack_u8,
    pack_u32,
)

MODEL_MAGIC = b"MPG1"
MODEL_VERSION = 1

_LEAF = 0
_INTERNAL = 1


@dataclass(frozen=True)
class BoostConfig:
    num_rounds: int = 500
    learning_rate: float = 0.05
    early_stopping_rounds: int = 10
    max_depth: int = 4
    reg_lambda: float = 1.0
    gamma: float = 0.0
    min_child_hessian: float = 1e-3

    def __post_init__(self) -> None:
        if self.num_rounds < 1:
            raise ValueError(f"num_rounds must be >= 1, got {self.num_rounds}")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValueError(f"learning_rate must be in (0, 1], got {self.learning_rate}")
        if self.early_stopping_rounds < 1:
            raise ValueError("early_stopping_rounds must be >= 1")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.reg_lambda < 0 or self.gamma < 0 or self.min_child_hessian < 0:
            raise ValueError("reg_lambda, gamma and min_child_hessian must be >= 0")


@dataclass(frozen=True)
class SplitStats:
    """Gradient and hessian sums over one node's instances."""

    g: float
    h: float


@dataclass(frozen=True)
class SplitCandidate:
    feature: int
    threshold: float
    gain: float


@dataclass
class RegressionTree:
    """Array-indexed binary tree; feature < 0 marks a leaf node."""

    feature: np.ndarray  # int32, -1 for leaves
    threshold: np.ndarray  # float64
    left: np.ndarray  # int32
    right: np.ndarray  # int32
    weight: np.ndarray  # float64, leaves only

    def num_nodes(self) -> int:
        return len(self.feature)

    def predict_one(self, x: np.ndarray) -> float:
        node = 0
        while self.feature[node] >= 0:
            if x[self.feature[node]] < self.threshold[node]:
                node = self.left[node]
            else:
                node = self.right[node]
        return float(self.weight[node])

    def predict_batch(self, xs: np.ndarray) -> np.ndarray:
        node = np.zeros(len(xs), dtype=np.int64)
        while True:
            feats = self.feature[node]
            active = feats >= 0
            if not active.any():
                break
            rows = np.nonzero(active)[0]
            cur = node[rows]
            go_left = xs[rows, feats[rows]] < self.threshold[cur]
            node[rows] = np.where(go_left, self.left[cur], self.right[cur])
        return self.weight[node]


@dataclass
class BoostedEnsemble:
    """Per-round, per-class trees plus the best-iteration marker."""

    rounds: list[list[RegressionTree]] = field(repr=False)
    learning_rate: float = 0.05
    num_classes: int = 2
    num_features: int = 0
    best_iteration: int = 0
    label_names: tuple[str, ...] = ()

    def truncated(self, num_rounds: int) -> "BoostedEnsemble":
        """Drop trees past num_rounds; best_iteration is capped to match."""
        return BoostedEnsemble(
            rounds=self.rounds[:num_rounds],
            learning_rate=self.learning_rate,
            num_classes=self.num_classes,
            num_features=self.num_features,
            best_iteration=min(self.best_iteration, num_rounds),
            label_names=self.label_names,
        )


def _softmax_rows(logits: np.ndarray) -> np.ndarray:
    shifted = np.exp(logits - logits.max(axis=1, keepdims=True))
    return shifted / shifted.sum(axis=1, keepdims=True)


def softmax_grad_hess(
    logits: Sequence[float] | np.ndarray, true_class: int
) -> list[tuple[float, float]]:
    """Per-class (g, h) of the softmax cross-entropy at the given logits.

    g_k = p_k - 1{k = y}, h_k = p_k (1 - p_k).
    """
    logits = np.asarray(logits, dtype=np.float64)
    k = logits.shape[0]
    if not 0 <= true_class < k:
        raise ValueError(f"true_class {true_class} out of range for K={k}")
    p = _softmax_rows(logits[None, :])[0]
    g = p.copy()
    g[true_class] -= 1.0
    h = p * (1.0 - p)
    return list(zip(g.tolist(), h.tolist()))


def leaf_weight(stats: SplitStats, reg_lambda: float) -> float:
    """Newton-optimal leaf value -G/(H + lambda)."""
    denom = stats.h + reg_lambda
    if denom <= 0.0:
        raise ValueError(f"H + lambda must be positive, got {denom}")
    return -stats.g / denom


def _gain(gl: float, hl: float, gr: float, hr: float, reg_lambda: float, gamma: float) -> float:
    parent_g = gl + gr
    parent_h = hl + hr
    return 0.5 * (
        gl * gl / (hl + reg_lambda)
        + gr * gr / (hr + reg_lambda)
        - parent_g * parent_g / (parent_h + reg_lambda)
    ) - gamma


@njit(cache=True)
def _scan_kernel(
    by_feature: np.ndarray,  # (num_feats, n_total) feature-major values
    g: np.ndarray,
    h: np.ndarray,
    sorted_idx: np.ndarray,  # (num_feats, n_node) instance ids, sorted per row
    reg_lambda: float,
    gamma: float,
    min_child_hessian: float,
) -> tuple[int, int, float]:
    """Best (feature, boundary position, gain) over presorted index rows.

    Scans features in ascending index and boundaries in ascending threshold
    with a strict improvement test, which realizes the lowest-feature-index,
    lowest-threshold tie-break. Returns feature -1 when no boundary has
    positive gain and min_child_hessian on both sides.
    """
    num_feats, n = sorted_idx.shape
    best_gain = 0.0
    best_feature = -1
    best_boundary = -1
    for f in range(num_feats):
        g_total = 0.0
        h_total = 0.0
        for i in range(n):
            k = sorted_idx[f, i]
            g_total += g[k]
            h_total += h[k]
        gl = 0.0
        hl = 0.0
        for i in range(n - 1):
            k = sorted_idx[f, i]
            gl += g[k]
            hl += h[k]
            if by_feature[f, k] == by_feature[f, sorted_idx[f, i + 1]]:
                continue
            gr = g_total - gl
            hr = h_total - hl
            if hl < min_child_hessian or hr < min_child_hessian:
                continue
            denom_l = hl + reg_lambda
            denom_r = hr + reg_lambda
            denom_p = hl + hr + reg_lambda
            if denom_l <= 0.0 or denom_r <= 0.0 or denom_p <= 0.0:
                continue
            pg = gl + gr
            gain = 0.5 * (gl * gl / denom_l + gr * gr / denom_r - pg * pg / denom_p) - gamma
            if gain > best_gain:
                best_gain = gain
                best_feature = f
                best_boundary = i
    return best_feature, best_boundary, best_gain


def best_split(
    features: np.ndarray,
    g: np.ndarray,
    h: np.ndarray,
    reg_lambda: float,
    gamma: float,
    min_child_hessian: float,
) -> SplitCandidate | None:
    """Exact greedy search over every boundary between distinct values.

    Thresholds are midpoints of consecutive distinct values. A candidate
    needs positive gain and at least min_child_hessian on each side. Ties
    break to the lowest feature index, then the lowest threshold.
    """
    features = np.asarray(features, dtype=np.float64)
    g = np.ascontiguousarray(g, dtype=np.float64)
    h = np.ascontiguousarray(h, dtype=np.float64)
    if len(features) < 2:
        return None
    by_feature = np.ascontiguousarray(features.T)
    order = np.argsort(by_feature, axis=1, kind="stable")
    feature, boundary, gain = _scan_kernel(
        by_feature, g, h, order, reg_lambda, gamma, min_child_hessian
    )
    if feature < 0:
        return None
    low = by_feature[feature, order[feature, boundary]]
    high = by_feature[feature, order[feature, boundary + 1]]
    return SplitCandidate(int(feature), float((low + high) / 2.0), float(gain))


class _TreeBuilder:
    """Recursive exact-greedy tree growth over presorted feature orders.

    Instances are sorted once per feature at the root; each split partitions
    the sorted index rows into order-preserving subsequences, so child scans
    see exactly what a fresh stable sort would produce without re-sorting.
    """

    def __init__(self, features: np.ndarray, g: np.ndarray, h: np.ndarray, config: BoostConfig):
        self.by_feature = np.ascontiguousarray(features.T)
        self.g = np.ascontiguousarray(g, dtype=np.float64)
        self.h = np.ascontiguousarray(h, dtype=np.float64)
        self.config = config
        self.nodes: list[tuple[int, float, int, int, float]] = []
        self.train_pred = np.zeros(len(features))
        self._member = np.zeros(len(features), dtype=bool)

    def build(self) -> RegressionTree:
        root_order = np.argsort(self.by_feature, axis=1, kind="stable")
        self._grow(root_order, 0)
        feature = np.array([n[0] for n in self.nodes], dtype=np.int32)
        threshold = np.array([n[1] for n in self.nodes], dtype=np.float64)
        left = np.array([n[2] for n in self.nodes], dtype=np.int32)
        right = np.array([n[3] for n in self.nodes], dtype=np.int32)
        weight = np.array([n[4] for n in self.nodes], dtype=np.float64)
        return RegressionTree(feature, threshold, left, right, weight)

    def _leaf(self, index: np.ndarray) -> int:
        stats = SplitStats(float(self.g[index].sum()), float(self.h[index].sum()))
        w = leaf_weight(stats, self.config.reg_lambda)
        self.nodes.append((-1, 0.0, -1, -1, w))
        self.train_pred[index] = w
        return len(self.nodes) - 1

    def _grow(self, sorted_idx: np.ndarray, depth: int) -> int:
        index = sorted_idx[0]  # any row holds the node's instance set
        if depth >= self.config.max_depth or index.shape[0] < 2:
            return self._leaf(index)
        feature, boundary, _ = _scan_kernel(
            self.by_feature, self.g, self.h, sorted_idx,
            self.config.reg_lambda, self.config.gamma, self.config.min_child_hessian,
        )
        if feature < 0:
            return self._leaf(index)
        low = self.by_feature[feature, sorted_idx[feature, boundary]]
        high = self.by_feature[feature, sorted_idx[feature, boundary + 1]]
        threshold = (low + high) / 2.0
        left_index = sorted_idx[feature, : boundary + 1]
        self._member[left_index] = True
        in_left = self._member[sorted_idx]
        left_sorted = sorted_idx[in_left].reshape(len(sorted_idx), boundary + 1)
        right_sorted = sorted_idx[~in_left].reshape(len(sorted_idx), -1)
        self._member[left_index] = False

        slot = len(self.nodes)
        self.nodes.append((feature, float(threshold), -1, -1, 0.0))
        left_child = self._grow(left_sorted, depth + 1)
        right_child = self._grow(right_sorted, depth + 1)
        self.nodes[slot] = (feature, float(threshold), left_child, right_child, 0.0)
        return slot


def multiclass_log_loss(logits: np.ndarray, labels: np.ndarray) -> float:
    """Mean negative log-probability of the true class under row softmax."""
    p = _softmax_rows(logits)
    picked = p[np.arange(len(labels)), labels]
    return float(-np.mean(np.log(np.maximum(picked, 1e-15))))


def train_ensemble(
    train_features: np.ndarray,
    train_labels: np.ndarray,
    valid_features: np.ndarray,
    valid_labels: np.ndarray,
    config: BoostConfig,
    num_classes: int,
    label_names: Sequence[str] = (),
    eval_hook: Callable[[int, np.ndarray], float] | None = None,
) -> BoostedEnsemble:
    """Boost K trees per round with early stopping on validation log-loss.

    Training halts once the validation loss has not strictly improved for
    early_stopping_rounds consecutive rounds; best_iteration points at the
    round with the minimum loss. eval_hook, when given, replaces the default
    validation log-loss (it receives the 1-based round and valid logits).
    """
    train_features = np.asarray(train_features, dtype=np.float64)
    valid_features = np.asarray(valid_features, dtype=np.float64)
    train_labels = np.asarray(train_labels)
    valid_labels = np.asarray(valid_labels)
    if num_classes < 2:
        raise ValueError(f"need at least 2 classes, got {num_classes}")
    if len(train_features) == 0 or len(valid_features) == 0:
        raise ValueError("train and valid sets must be non-empty")
    if train_features.ndim != 2 or valid_features.ndim != 2:
        raise ValueError("feature arrays must be 2-D")
    if train_features.shape[1] != valid_features.shape[1]:
        raise ValueError("train and valid feature widths differ")
    if np.isnan(train_features).any() or np.isnan(valid_features).any():
        raise ValueError("NaN feature values are not supported")

    n_train = len(train_features)
    train_logits = np.zeros((n_train, num_classes))
    valid_logits = np.zeros((len(valid_features), num_classes))
    rounds: list[list[RegressionTree]] = []
    best_loss = np.inf
    best_iteration = 0
    stale = 0

    for round_number in range(1, config.num_rounds + 1):
        p = _softmax_rows(train_logits)
        grad = p.copy()
        grad[np.arange(n_train), train_labels] -= 1.0
        hess = p * (1.0 - p)

        round_trees: list[RegressionTree] = []
        for k in range(num_classes):
            builder = _TreeBuilder(train_features, grad[:, k], hess[:, k], config)
            tree = builder.build()
            round_trees.append(tree)
            train_logits[:, k] += config.learning_rate * builder.train_pred
            valid_logits[:, k] += config.learning_rate * tree.predict_batch(valid_features)
        rounds.append(round_trees)

        if eval_hook is not None:
            loss = eval_hook(round_number, valid_logits)
        else:
            loss = multiclass_log_loss(valid_logits, valid_labels)
        if loss < best_loss:
            best_loss = loss
            best_iteration = round_number
            stale = 0
        else:
            stale += 1
            if stale >= config.early_stopping_rounds:
                break

    return BoostedEnsemble(
        rounds=rounds,
        learning_rate=config.learning_rate,
        num_classes=num_classes,
        num_features=train_features.shape[1],
        best_iteration=best_iteration,
        label_names=tuple(label_names),
    )


def predict_logits(ensemble: BoostedEnsemble, features: np.ndarray) -> np.ndarray:
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 1 or features.shape[0] != ensemble.num_features:
        raise ValueError(
            f"expected a feature vector of length {ensemble.num_features}, "
            f"got shape {features.shape}"
        )
    if np.isnan(features).any():
        raise ValueError("NaN feature values are not supported")
    logits = np.zeros(ensemble.num_classes)
    for round_trees in ensemble.rounds[: ensemble.best_iteration]:
        for k, tree in enumerate(round_trees):
            logits[k] += ensemble.learning_rate * tree.predict_one(features)
    return logits


def predict_proba(ensemble: BoostedEnsemble, features: np.ndarray) -> np.ndarray:
    """Class probabilities from the trees up to best_iteration."""
    return _softmax_rows(predict_logits(ensemble, features)[None, :])[0]


def _pack_tree(tree: RegressionTree) -> bytes:
    parts = [pack_u32(tree.num_nodes())]
    for i in range(tree.num_nodes()):
        if tree.feature[i] < 0:
            parts.append(pack_u8(_LEAF))
            parts.append(pack_f64(float(tree.weight[i])))
        else:
            parts.append(pack_u8(_INTERNAL))
            parts.append(pack_u32(int(tree.feature[i])))
            parts.append(pack_f64(float(tree.threshold[i])))
            parts.append(pack_u32(int(tree.left[i])))
            parts.append(pack_u32(int(tree.right[i])))
    return b"".join(parts)


def save_model(ensemble: BoostedEnsemble) -> bytes:
    parts = [
        MODEL_MAGIC,
        pack_u32(MODEL_VERSION),
        pack_u32(ensemble.num_classes),
        pack_u32(len(ensemble.rounds)),
        pack_u32(ensemble.best_iteration),
        pack_f64(ensemble.learning_rate),
        pack_u32(ensemble.num_features),
        pack_u32(len(ensemble.label_names)),
    ]
    parts.extend(pack_str(name) for name in ensemble.label_names)
    for round_trees in ensemble.rounds:
        for tree in round_trees:
            parts.append(_pack_tree(tree))
    return b"".join(parts)


def _read_tree(reader: ByteReader) -> RegressionTree:
    count = reader.read_u32()
    feature = np.empty(count, dtype=np.int32)
    threshold = np.zeros(count, dtype=np.float64)
    left = np.full(count, -1, dtype=np.int32)
    right = np.full(count, -1, dtype=np.int32)
    weight = np.zeros(count, dtype=np.float64)
    for i in range(count):
        flag = reader.read_u8()
        if flag == _LEAF:
            feature[i] = -1
            weight[i] = reader.read_f64()
        elif flag == _INTERNAL:
            feature[i] = reader.read_u32()
            threshold[i] = reader.read_f64()
            left[i] = reader.read_u32()
            right[i] = reader.read_u32()
        else:
            raise ModelFormatError(f"unknown node flag {flag}")
    return RegressionTree(feature, threshold, left, right, weight)


def load_model(data: bytes) -> BoostedEnsemble:
    reader = ByteReader(data)
    reader.expect_magic(MODEL_MAGIC)
    version = reader.read_u32()
    if version != MODEL_VERSION:
        raise VersionMismatchError(f"format version {version}, expected {MODEL_VERSION}")
    num_classes = reader.read_u32()
    num_rounds = reader.read_u32()
    best_iteration = reader.read_u32()
    learning_rate = reader.read_f64()
    num_features = reader.read_u32()
    num_names = reader.read_u32()
    label_names = tuple(reader.read_str() for _ in range(num_names))
    rounds = [
        [_read_tree(reader) for _ in range(num_classes)] for _ in range(num_rounds)
    ]
    reader.expect_end()
    return BoostedEnsemble(
        rounds=rounds,
        learning_rate=learning_rate,
        num_classes=num_classes,
        num_features=num_features,
        best_iteration=best_iteration,
        label_names=label_names,
    )
