"""Error metrics, the paired t-test and aggregation of repeated runs."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

CF_EPS = 1e-15
CF_MAX_ITER = 10_000
_TINY = 1e-300


def _as_pair(pred: Sequence[float], truth: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    pred = np.asarray(pred, dtype=float).ravel()
    truth = np.asarray(truth, dtype=float).ravel()
    if pred.shape != truth.shape:
        raise ValueError(f"length mismatch: {pred.size} predictions, {truth.size} targets")
    if pred.size == 0:
        raise ValueError("empty input")
    return pred, truth


def mse(pred: Sequence[float], truth: Sequence[float]) -> float:
    pred, truth = _as_pair(pred, truth)
    diff = pred - truth
    # cumsum accumulates strictly left to right (np.sum is pairwise).
    return float(np.cumsum(diff * diff)[-1] / diff.size)


def rmse(pred: Sequence[float], truth: Sequence[float]) -> float:
    return math.sqrt(mse(pred, truth))


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction of the incomplete beta function (modified Lentz)."""
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = 1.0 / (d if abs(d) > _TINY else _TINY)
    h = d
    for m in range(1, CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > _TINY else _TINY)
        c = 1.0 + aa / c
        c = c if abs(c) > _TINY else _TINY
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > _TINY else _TINY)
        c = 1.0 + aa / c
        c = c if abs(c) > _TINY else _TINY
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < CF_EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def regularized_incomplete_beta(x: float, a: float, b: float, one_minus_x: float | None = None) -> float:
    """I_x(a, b).

    ``one_minus_x`` may be passed when ``1 - x`` is known more accurately
    than the subtraction would give.
    """
    y = 1.0 - x if one_minus_x is None else one_minus_x
    if x <= 0.0:
        return 0.0
    if y <= 0.0:
        return 1.0
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log(y)
    )
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, y) / b


def student_t_two_sided_p(t: float, df: float) -> float:
    """Two-sided tail probability P(|T| >= |t|) of Student's t with ``df`` dof."""
    if not math.isfinite(t):
        raise ValueError(f"t must be finite, got {t}")
    if df < 1:
        raise ValueError(f"df must be >= 1, got {df}")
    t2 = t * t
    if t2 == 0.0:
        return 1.0
    x = df / (df + t2)
    p = regularized_incomplete_beta(x, df / 2.0, 0.5, one_minus_x=t2 / (df + t2))
    return min(1.0, max(0.0, p))


@dataclass(frozen=True)
class TTestResult:
    t: float
    df: int
    p: float


def paired_t_test(a: Sequence[float], b: Sequence[float]) -> TTestResult:
    """Two-sided paired t-test on ``a - b``.

    Zero differences give ``t=0, p=1``. Constant nonzero differences give
    ``t=±inf, p=0``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.size} vs {b.size}")
    n = a.size
    if n < 2:
        raise ValueError(f"paired t-test needs at least 2 pairs, got {n}")
    d = a - b
    mean = float(np.mean(d))
    sd = float(np.std(d, ddof=1))
    df = n - 1
    if np.all(d == d[0]):
        if d[0] == 0.0:
            return TTestResult(0.0, df, 1.0)
        return TTestResult(math.copysign(math.inf, d[0]), df, 0.0)
    t = mean / (sd / math.sqrt(n))
    return TTestResult(t, df, student_t_two_sided_p(t, df))


@dataclass(frozen=True)
class RunOutcome:
    run_index: int
    seed: int
    fi_test_mse: float
    hof_test_mse: float
    fi_fitness: float | None = None
    gen0_best_fitness: float | None = None
    hof_fitness: float | None = None
    n_train: int | None = None
    n_test: int | None = None

    def __post_init__(self) -> None:
        for name in ("fi_test_mse", "hof_test_mse"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be finite and >= 0, got {v}")

    def to_json(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class AggregateReport:
    n_runs: int
    hof_mean: float
    hof_std: float
    fi_mean: float
    fi_std: float
    win_percent: float
    loss_percent: float
    tie_percent: float
    t_statistic: float
    p_value: float

    def to_json(self) -> dict:
        doc = asdict(self)
        if not math.isfinite(self.t_statistic):
            doc["t_statistic"] = "+inf" if self.t_statistic > 0 else "-inf"
        return doc


def aggregate_runs(outcomes: Sequence[RunOutcome]) -> AggregateReport:
    """Means, sample standard deviations, win rate and paired t-test (HOF vs FI)."""
    n = len(outcomes)
    if n < 2:
        raise ValueError(f"need at least 2 runs to aggregate, got {n}")
    hof = np.array([o.hof_test_mse for o in outcomes])
    fi = np.array([o.fi_test_mse for o in outcomes])
    wins = int(np.sum(hof < fi))
    losses = int(np.sum(hof > fi))
    ties = n - wins - losses
    test = paired_t_test(hof, fi)
    return AggregateReport(
        n_runs=n,
        hof_mean=float(np.mean(hof)),
        hof_std=float(np.std(hof, ddof=1)),
        fi_mean=float(np.mean(fi)),
        fi_std=float(np.std(fi, ddof=1)),
        win_percent=100.0 * wins / n,
        loss_percent=100.0 * losses / n,
        tie_percent=100.0 * ties / n,
        t_statistic=test.t,
        p_value=test.p,
    )
