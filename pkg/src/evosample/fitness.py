"""Ensemble prediction and the three ensemble fitness functions (all minimised).

FEMPO: mean over members of the RMSE on that member's out-of-bag rows.
FEMPT: mean over members of the RMSE on that member's private test rows.
FEGT:  RMSE of the averaged ensemble prediction on a global holdout carved
       from the training split before the population is created.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from evosample.data import Dataset, round_half_up
from evosample.errors import ConfigError, DegenerateSplitError
from evosample.genome import FitnessKind, Individual, MemberGenome
from evosample.stats import rmse

logger = logging.getLogger(__name__)

DEFAULT_HOLDOUT_FRACTION = 0.2


@dataclass(frozen=True)
class FitnessContext:
    train: Dataset
    global_holdout: Dataset | None = None


def carve_holdout(
    train: Dataset, fraction: float, rng: np.random.Generator
) -> tuple[Dataset, Dataset]:
    """Split ``train`` into (remaining training rows, global holdout)."""
    if not 0.0 < fraction < 1.0:
        raise ConfigError(f"global holdout fraction must be in (0, 1), got {fraction}")
    n_hold = round_half_up(fraction * train.n_rows)
    if n_hold < 1 or n_hold > train.n_rows - 1:
        raise DegenerateSplitError(
            f"holdout fraction {fraction} on {train.n_rows} rows leaves an empty side"
        )
    order = rng.permutation(train.n_rows)
    hold, rest = np.sort(order[:n_hold]), np.sort(order[n_hold:])
    return train.subset(rest), train.subset(hold)


def member_predictions(ind: Individual, rows: np.ndarray) -> np.ndarray:
    """K x M matrix of per-member predictions."""
    rows = np.asarray(rows, dtype=float)
    out = np.empty((len(ind.members), rows.shape[0]))
    for k, member in enumerate(ind.members):
        if member.model is None:
            raise ValueError(f"member {k} has no fitted tree")
        out[k] = member.model.predict(rows)
    return out


def predict_ensemble(ind: Individual, rows: np.ndarray) -> np.ndarray:
    preds = member_predictions(ind, rows)
    # Sequential accumulation over members keeps the summation order fixed.
    total = np.zeros(preds.shape[1])
    for row in preds:
        total += row
    return total / preds.shape[0]


def oob_rows(member: MemberGenome, n_train: int) -> np.ndarray:
    """Training rows neither in the member's bag nor in its private test."""
    mask = np.ones(n_train, dtype=bool)
    mask[member.bag] = False
    mask[member.private_test] = False
    return np.flatnonzero(mask)


def _member_rmse(member: MemberGenome, train: Dataset, rows: np.ndarray) -> float:
    if member.model is None:
        raise ValueError("member has no fitted tree")
    pred = member.model.predict(train.features[rows])
    return rmse(pred, train.target[rows])


def fempo(ind: Individual, ctx: FitnessContext) -> float:
    scores: list[float | None] = []
    for member in ind.members:
        rows = oob_rows(member, ctx.train.n_rows)
        scores.append(_member_rmse(member, ctx.train, rows) if rows.size else None)
    known = [s for s in scores if s is not None]
    if not known:
        raise ConfigError("every member's bag covers the training set; FEMPO undefined")
    if len(known) < len(scores):
        fill = float(np.mean(known))
        logger.warning(
            "%d member(s) have an empty out-of-bag set; using the mean of the rest",
            len(scores) - len(known),
        )
        scores = [fill if s is None else s for s in scores]
    return _mean(scores)


def fempt(ind: Individual, ctx: FitnessContext) -> float:
    scores = []
    for k, member in enumerate(ind.members):
        if member.private_test.size == 0:
            raise ConfigError(f"member {k} has an empty private test set")
        scores.append(_member_rmse(member, ctx.train, member.private_test))
    return _mean(scores)


def fegt(ind: Individual, ctx: FitnessContext) -> float:
    hold = ctx.global_holdout
    if hold is None or hold.n_rows == 0:
        raise ConfigError("FEGT needs a non-empty global holdout")
    return rmse(predict_ensemble(ind, hold.features), hold.target)


def _mean(values: list[float]) -> float:
    total = 0.0
    for v in values:
        total += v
    return total / len(values)


FITNESS_FUNCTIONS = {
    FitnessKind.FEMPO: fempo,
    FitnessKind.FEMPT: fempt,
    FitnessKind.FEGT: fegt,
}


def evaluate(ind: Individual, kind: FitnessKind, ctx: FitnessContext) -> Individual:
    """Return ``ind`` with its fitness cache filled (no-op when already set)."""
    if ind.fitness is not None:
        return ind
    return ind.with_fitness(FITNESS_FUNCTIONS[FitnessKind(kind)](ind, ctx))
