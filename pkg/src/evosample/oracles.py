"""Slow reference computations used by the test suite and ``selftest``.

They share no code path with the fast implementations they check.
"""

from __future__ import annotations

import math
from typing import Any, Sequence

import mpmath
import numpy as np

from evosample.tree import GAIN_RTOL


def _sse(values: list[float]) -> float:
    if not values:
        return 0.0
    m = math.fsum(values) / len(values)
    return math.fsum((v - m) ** 2 for v in values)


def exhaustive_tree(
    features: np.ndarray,
    target: np.ndarray,
    rows: Sequence[int],
    feature_ids: Sequence[int],
    max_depth: int,
) -> dict[str, Any]:
    """Grow a CART tree by scoring every (feature, midpoint) split from scratch.

    Works on the expanded multiset of rows, so duplicates are simply repeated
    entries. Returns the same nested-dict shape as ``RegressionTree.to_dict``.
    """
    samples = [(tuple(float(v) for v in features[r]), float(target[r])) for r in rows]
    feats = sorted(set(int(f) for f in feature_ids))

    def grow(node: list[tuple[tuple[float, ...], float]], depth: int) -> dict[str, Any]:
        ys = [y for _, y in node]
        leaf = {"value": math.fsum(ys) / len(ys), "n_samples": len(ys)}
        if depth >= max_depth or len(ys) < 2 or len(set(ys)) == 1:
            return leaf
        parent = _sse(ys)
        candidates = []
        for f in feats:
            values = sorted(set(x[f] for x, _ in node))
            for lo, hi in zip(values, values[1:]):
                thr = (lo + hi) / 2.0
                left = [y for x, y in node if x[f] <= thr]
                right = [y for x, y in node if x[f] > thr]
                candidates.append((parent - _sse(left) - _sse(right), f, thr))
        if not candidates:
            return leaf
        best = max(c[0] for c in candidates)
        tol = GAIN_RTOL * parent
        if best <= tol:
            return leaf
        _, f, thr = next(c for c in candidates if c[0] >= best - tol)
        return {
            "feature": f,
            "threshold": thr,
            "left": grow([s for s in node if s[0][f] <= thr], depth + 1),
            "right": grow([s for s in node if s[0][f] > thr], depth + 1),
        }

    return grow(samples, 0)


def trees_match(a: dict[str, Any], b: dict[str, Any], atol: float = 1e-12) -> bool:
    """Node-for-node comparison; leaf values compared to ``atol`` (relative too)."""
    if ("feature" in a) != ("feature" in b):
        return False
    if "feature" in a:
        return (
            a["feature"] == b["feature"]
            and a["threshold"] == b["threshold"]
            and trees_match(a["left"], b["left"], atol)
            and trees_match(a["right"], b["right"], atol)
        )
    return a["n_samples"] == b["n_samples"] and math.isclose(
        a["value"], b["value"], rel_tol=atol, abs_tol=atol
    )


def t_two_sided_p_quadrature(t: float, df: int, dps: int = 25) -> float:
    """2 * integral of the Student-t density from |t| to infinity, in mpmath."""
    with mpmath.workdps(dps):
        nu = mpmath.mpf(df)
        c = mpmath.gamma((nu + 1) / 2) / (mpmath.sqrt(nu * mpmath.pi) * mpmath.gamma(nu / 2))
        density = lambda u: c * (1 + u * u / nu) ** (-(nu + 1) / 2)  # noqa: E731
        return float(2 * mpmath.quad(density, [abs(t), mpmath.inf]))


def oob_rows_bruteforce(bag: Sequence[int], private_test: Sequence[int], n_train: int) -> list[int]:
    bag_set, private = set(int(b) for b in bag), set(int(p) for p in private_test)
    return [r for r in range(n_train) if r not in bag_set and r not in private]


def rmse_bruteforce(pred: Sequence[float], truth: Sequence[float]) -> float:
    return math.sqrt(math.fsum((float(p) - float(t)) ** 2 for p, t in zip(pred, truth)) / len(pred))
