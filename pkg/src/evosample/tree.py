"""Depth-capped CART regression tree built from scratch.

The tree is stored as flat node arrays in pre-order (left subtree first).
A node with ``feature == -1`` is a leaf. Rows with ``x[feature] <= threshold``
route left, the rest route right.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from evosample.data import Dataset

LEAF = -1

# Relative slack (against the node's SSE) used both for "no split reduces
# impurity" and for treating two candidate splits as tied.
GAIN_RTOL = 1e-10


@dataclass(frozen=True, eq=False)
class RegressionTree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_samples: np.ndarray
    max_depth: int
    feature_ids: tuple[int, ...]

    @property
    def n_nodes(self) -> int:
        return int(self.feature.shape[0])

    def depth(self) -> int:
        """Number of internal nodes on the longest root-to-leaf path."""
        depths = np.zeros(self.n_nodes, dtype=int)
        for i in range(self.n_nodes):  # pre-order: parents precede children
            if self.feature[i] != LEAF:
                depths[self.left[i]] = depths[i] + 1
                depths[self.right[i]] = depths[i] + 1
        return int(depths.max())

    def predict(self, rows: np.ndarray) -> np.ndarray:
        """Predict a single row (1-D input) or a matrix of rows (2-D input)."""
        rows = np.asarray(rows, dtype=float)
        if rows.ndim == 1:
            return self.predict(rows[None, :])[0]
        node = np.zeros(rows.shape[0], dtype=np.intp)
        index = np.arange(rows.shape[0])
        for _ in range(self.max_depth):
            feat = self.feature[node]
            internal = feat != LEAF
            if not internal.any():
                break
            go_left = rows[index, np.where(internal, feat, 0)] <= self.threshold[node]
            child = np.where(go_left, self.left[node], self.right[node])
            node = np.where(internal, child, node)
        return self.value[node]

    def to_dict(self, i: int = 0) -> dict[str, Any]:
        """Nested node representation used for JSON dumps and comparisons."""
        if self.feature[i] == LEAF:
            return {"value": float(self.value[i]), "n_samples": int(self.n_samples[i])}
        return {
            "feature": int(self.feature[i]),
            "threshold": float(self.threshold[i]),
            "left": self.to_dict(int(self.left[i])),
            "right": self.to_dict(int(self.right[i])),
        }


def predict(tree: RegressionTree, row: Sequence[float]) -> float:
    return float(tree.predict(np.asarray(row, dtype=float)))


def _best_split(x: np.ndarray, y: np.ndarray, w: np.ndarray) -> tuple[int, float] | None:
    """Return ``(column, threshold)`` of the best split of one node, or None.

    ``x`` holds the node's distinct rows restricted to the candidate columns
    (ascending feature id), ``w`` the multiplicity of each row.
    """
    total_w = w.sum()
    mean = np.dot(w, y) / total_w
    yc = y - mean
    parent_sse = float(np.dot(w, yc * yc))
    if parent_sse <= 0.0:
        return None

    order = np.argsort(x, axis=0, kind="stable")
    xs = np.take_along_axis(x, order, axis=0)
    ws = w[order]
    if xs.shape[0] < 2:
        return None
    cw = np.cumsum(ws, axis=0)[:-1]
    csum = np.cumsum(ws * yc[order], axis=0)
    total_s = csum[-1]
    cs = csum[:-1]
    right_w = total_w - cw
    # SSE reduction of splitting after each sorted position.
    gain = cs * cs / cw + (total_s - cs) ** 2 / right_w - total_s * total_s / total_w
    valid = xs[:-1] < xs[1:]
    if not valid.any():
        return None
    gain = np.where(valid, gain, -np.inf)
    best = gain.max()
    tol = GAIN_RTOL * parent_sse
    if best <= tol:
        return None
    hits = gain >= best - tol
    col = int(np.argmax(hits.any(axis=0)))
    pos = int(np.argmax(hits[:, col]))
    threshold = (xs[pos, col] + xs[pos + 1, col]) / 2.0
    return col, float(threshold)


def fit(
    ds: Dataset,
    row_indices: Sequence[int] | np.ndarray,
    feature_ids: Sequence[int],
    max_depth: int = 5,
) -> RegressionTree:
    """Grow a CART regression tree on a multiset of rows.

    Rows repeated in ``row_indices`` count with multiplicity. Splits
    minimise the weighted sum of child squared errors; candidate thresholds
    are midpoints of consecutive distinct values, and ties go to the lowest
    feature id, then the smallest threshold.
    """
    rows = np.asarray(row_indices, dtype=np.intp)
    feats = sorted(set(int(f) for f in feature_ids))
    if rows.size == 0:
        raise ValueError("cannot fit a tree on an empty row set")
    if not feats:
        raise ValueError("cannot fit a tree on an empty feature set")
    if max_depth < 1:
        raise ValueError(f"max_depth must be >= 1, got {max_depth}")
    if rows.min() < 0 or rows.max() >= ds.n_rows:
        raise IndexError(f"row index out of range [0, {ds.n_rows})")
    if feats[0] < 0 or feats[-1] >= ds.n_cols:
        raise IndexError(f"feature index out of range [0, {ds.n_cols})")

    uniq, counts = np.unique(rows, return_counts=True)
    x_all = ds.features[np.ix_(uniq, feats)]
    y_all = ds.target[uniq]
    w_all = counts.astype(float)

    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    value: list[float] = []
    n_samples: list[int] = []

    def grow(idx: np.ndarray, depth: int) -> int:
        node = len(feature)
        y, w = y_all[idx], w_all[idx]
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        value.append(float(np.dot(w, y) / w.sum()))
        n_samples.append(int(w.sum()))
        if depth >= max_depth or w.sum() < 2 or np.all(y == y[0]):
            return node
        split = _best_split(x_all[idx], y, w)
        if split is None:
            return node
        col, thr = split
        go_left = x_all[idx, col] <= thr
        feature[node] = feats[col]
        threshold[node] = thr
        left[node] = grow(idx[go_left], depth + 1)
        right[node] = grow(idx[~go_left], depth + 1)
        return node

    grow(np.arange(uniq.size), 0)
    return RegressionTree(
        feature=np.array(feature, dtype=np.intp),
        threshold=np.array(threshold, dtype=float),
        left=np.array(left, dtype=np.intp),
        right=np.array(right, dtype=np.intp),
        value=np.array(value, dtype=float),
        n_samples=np.array(n_samples, dtype=np.intp),
        max_depth=max_depth,
        feature_ids=tuple(feats),
    )
