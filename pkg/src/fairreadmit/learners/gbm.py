"""Newton-boosted regression trees on the weighted logistic loss.

Splits are exact greedy: every midpoint between distinct feature values
present in a node is a candidate. Rows are grouped per feature into one bin
per distinct value, so the histogram scan enumerates exactly those
candidates; only non-default entries of each feature are visited, the
default bin being recovered from the node totals.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import _kernels
from ._common import LearnerError, check_training_set, log_sigmoid, sigmoid


@dataclass(frozen=True)
class GbmHyper:
    n_trees: int = 100
    max_depth: int = 3
    learning_rate: float = 0.1
    l2_leaf_penalty: float = 1.0
    min_child_weight: float = 1.0

    def __post_init__(self):
        if self.n_trees < 0 or self.max_depth < 0:
            raise LearnerError("n_trees and max_depth must be non-negative")
        if not 0 < self.learning_rate <= 1:
            raise LearnerError(f"learning_rate must be in (0, 1], got {self.learning_rate}")
        if self.l2_leaf_penalty < 0 or self.min_child_weight < 0:
            raise LearnerError("l2_leaf_penalty and min_child_weight must be non-negative")


@dataclass(frozen=True)
class Tree:
    """Flat node arrays; ``feature == -1`` marks a leaf. Rows go left iff x < threshold."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def n_nodes(self):
        return len(self.feature)

    def depth(self):
        depth = np.zeros(self.n_nodes, dtype=np.int64)
        for i in range(self.n_nodes):
            if self.feature[i] >= 0:
                depth[self.left[i]] = depth[i] + 1
                depth[self.right[i]] = depth[i] + 1
        return int(depth.max(initial=0))

    def to_list(self):
        return [
            [int(f), float(t), int(l), int(r), float(v)]
            for f, t, l, r, v in zip(self.feature, self.threshold, self.left, self.right, self.value)
        ]

    @classmethod
    def from_list(cls, nodes):
        arr = list(zip(*nodes)) if nodes else [[], [], [], [], []]
        return cls(
            feature=np.asarray(arr[0], dtype=np.int64),
            threshold=np.asarray(arr[1], dtype=np.float64),
            left=np.asarray(arr[2], dtype=np.int64),
            right=np.asarray(arr[3], dtype=np.int64),
            value=np.asarray(arr[4], dtype=np.float64),
        )


@dataclass(frozen=True)
class GbmModel:
    trees: list
    learning_rate: float
    base_score: float
    n_features: int
    hyper: GbmHyper = field(default_factory=GbmHyper)
    training_meta: dict = field(default_factory=dict)

    @property
    def n_trees(self):
        return len(self.trees)

    def decision_function(self, X):
        if X.shape[1] != self.n_features:
            raise LearnerError(f"model expects {self.n_features} features, got {X.shape[1]}")
        Xr = _as_csr(X)
        out = np.full(Xr.shape[0], self.base_score)
        for tree in self.trees:
            _kernels.predict_tree_csr(
                Xr.indptr, Xr.indices, Xr.data,
                tree.feature, tree.threshold, tree.left, tree.right, tree.value,
                out, self.learning_rate,
            )
        return out

    def to_dict(self):
        return {
            "kind": "gbm",
            "base_score": self.base_score,
            "learning_rate": self.learning_rate,
            "n_features": self.n_features,
            "hyper": {
                "n_trees": self.hyper.n_trees,
                "max_depth": self.hyper.max_depth,
                "learning_rate": self.hyper.learning_rate,
                "l2_leaf_penalty": self.hyper.l2_leaf_penalty,
                "min_child_weight": self.hyper.min_child_weight,
            },
            "trees": [t.to_list() for t in self.trees],
            "training_meta": dict(self.training_meta),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            trees=[Tree.from_list(t) for t in d["trees"]],
            learning_rate=float(d["learning_rate"]),
            base_score=float(d["base_score"]),
            n_features=int(d["n_features"]),
            hyper=GbmHyper(**d["hyper"]),
            training_meta=dict(d.get("training_meta", {})),
        )


def _as_csr(X):
    Xr = sp.csr_matrix(X, dtype=np.float64)
    if not Xr.has_sorted_indices:
        Xr = Xr.copy()
        Xr.sort_indices()
    Xr.sum_duplicates()
    return Xr


@dataclass(frozen=True)
class BinnedMatrix:
    """Per-feature distinct-value codes, stored only where a row differs from
    the feature's most frequent value (CSC-like: ``indptr`` indexes features)."""

    indptr: np.ndarray
    rows: np.ndarray
    codes: np.ndarray
    bin_offset: np.ndarray
    bin_values: np.ndarray
    default_code: np.ndarray
    n_rows: int


def bin_features(X) -> BinnedMatrix:
    n, d = X.shape
    Xc = sp.csc_matrix(X, dtype=np.float64)
    Xc.sum_duplicates()
    Xc.eliminate_zeros()
    Xc.sort_indices()
    indptr = [0]
    rows_out, codes_out, values_out, offset, default = [], [], [], [0], []
    for j in range(d):
        p0, p1 = Xc.indptr[j], Xc.indptr[j + 1]
        rj = Xc.indices[p0:p1].astype(np.int64)
        xj = Xc.data[p0:p1]
        n_zero = n - len(rj)
        vals = np.unique(np.r_[xj, 0.0]) if n_zero else np.unique(xj)
        codes = np.searchsorted(vals, xj)
        counts = np.bincount(codes, minlength=len(vals))
        zero_code = int(np.searchsorted(vals, 0.0)) if n_zero else -1
        if n_zero:
            counts[zero_code] += n_zero
        dflt = int(np.argmax(counts)) if len(vals) else 0
        if n_zero and dflt == zero_code:
            r_keep, c_keep = rj, codes
        else:
            full = np.full(n, zero_code, dtype=np.int64)
            full[rj] = codes
            r_keep = np.flatnonzero(full != dflt)
            c_keep = full[r_keep]
        rows_out.append(r_keep)
        codes_out.append(c_keep)
        values_out.append(vals)
        indptr.append(indptr[-1] + len(r_keep))
        offset.append(offset[-1] + len(vals))
        default.append(dflt)
    cat = lambda parts, dt: np.concatenate(parts).astype(dt) if parts else np.zeros(0, dt)
    return BinnedMatrix(
        indptr=np.asarray(indptr, dtype=np.int64),
        rows=cat(rows_out, np.int64),
        codes=cat(codes_out, np.int64),
        bin_offset=np.asarray(offset, dtype=np.int64),
        bin_values=cat(values_out, np.float64),
        default_code=np.asarray(default, dtype=np.int64),
        n_rows=n,
    )


_SPLITTER = 134217729.0


def two_prod(a, b):
    """Error-free product: ``p + e == a * b`` exactly (Dekker/Veltkamp)."""
    p = a * b
    t = _SPLITTER * a
    ah = t - (t - a)
    al = a - ah
    t = _SPLITTER * b
    bh = t - (t - b)
    bl = b - bh
    e = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, e


def split_gain(g_left, h_left, g_right, h_right, lam):
    """Loss reduction of a split from the children's gradient/hessian sums."""
    g, h = g_left + g_right, h_left + h_right
    return 0.5 * (g_left**2 / (h_left + lam) + g_right**2 / (h_right + lam) - g**2 / (h + lam))


def weighted_log_loss(F, y, w):
    return -float(np.dot(w, y * log_sigmoid(F) + (1.0 - y) * log_sigmoid(-F)))


def grow_tree(binned: BinnedMatrix, gp, ge, hp, he, hyper: GbmHyper):
    """Level-wise exact greedy tree; returns the tree and each row's leaf id."""
    n = binned.n_rows
    lam = float(hyper.l2_leaf_penalty)
    feature, threshold, left, right, value = [-1], [0.0], [-1], [-1], [0.0]
    node_of_row = np.zeros(n, dtype=np.int64)
    leaf_of_row = np.full(n, -1, dtype=np.int64)
    level = [0]
    for depth in range(hyper.max_depth + 1):
        K = len(level)
        G, H, cnt, g_tot, h_tot, _ = _kernels.build_histograms(
            binned.indptr, binned.rows, binned.codes, binned.bin_offset, binned.default_code,
            node_of_row, gp, ge, hp, he, K,
        )
        if depth < hyper.max_depth:
            bf, bc, bt, _ = _kernels.find_best_splits(
                G, H, cnt, g_tot, h_tot, binned.bin_offset, binned.bin_values,
                lam, float(hyper.min_child_weight),
            )
        else:
            bf = np.full(K, -1, dtype=np.int64)
            bc = np.full(K, -1, dtype=np.int64)
            bt = np.zeros(K)
        left_local = np.full(K, -1, dtype=np.int64)
        right_local = np.full(K, -1, dtype=np.int64)
        leaf_id = np.full(K, -1, dtype=np.int64)
        nxt = []
        for k, gid in enumerate(level):
            if bf[k] >= 0:
                for side, local in (("l", left_local), ("r", right_local)):
                    child = len(feature)
                    feature.append(-1)
                    threshold.append(0.0)
                    left.append(-1)
                    right.append(-1)
                    value.append(0.0)
                    local[k] = len(nxt)
                    nxt.append(child)
                    if side == "l":
                        left[gid] = child
                    else:
                        right[gid] = child
                feature[gid] = int(bf[k])
                threshold[gid] = float(bt[k])
            else:
                denom = h_tot[k] + lam
                value[gid] = float(-g_tot[k] / denom) if denom > 0 else 0.0
                leaf_id[k] = gid
        node_of_row = _kernels.partition(
            binned.indptr, binned.rows, binned.codes, binned.default_code, node_of_row,
            bf, bc, left_local, right_local, leaf_id, leaf_of_row,
        )
        level = nxt
        if not level:
            break
    tree = Tree(
        feature=np.asarray(feature, dtype=np.int64),
        threshold=np.asarray(threshold, dtype=np.float64),
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        value=np.asarray(value, dtype=np.float64),
    )
    return tree, leaf_of_row


def train_gbm(train, hyper: GbmHyper | None = None) -> GbmModel:
    hyper = hyper or GbmHyper()
    X = train.X
    y = np.asarray(train.y, dtype=np.float64)
    w = np.asarray(train.w, dtype=np.float64)
    check_training_set(X, train.y, w)
    binned = bin_features(X)
    pos = math.fsum((w * y).tolist())
    neg = math.fsum((w * (1.0 - y)).tolist())
    base = math.log(pos / neg)
    F = np.full(X.shape[0], base)
    losses = [weighted_log_loss(F, y, w)]
    trees = []
    for _ in range(hyper.n_trees):
        p = sigmoid(F)
        gp, ge = two_prod(w, p - y)
        hp, he = two_prod(w, p * (1.0 - p))
        tree, leaf_of_row = grow_tree(binned, gp, ge, hp, he, hyper)
        F += hyper.learning_rate * tree.value[leaf_of_row]
        trees.append(tree)
        losses.append(weighted_log_loss(F, y, w))
    return GbmModel(
        trees=trees,
        learning_rate=hyper.learning_rate,
        base_score=base,
        n_features=X.shape[1],
        hyper=hyper,
        training_meta={"loss_history": losses, "final_loss": losses[-1]},
    )
