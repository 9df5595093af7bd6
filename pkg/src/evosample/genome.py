"""Individuals (ensembles of member genomes) and their genetic operators.

Every operator is pure: it returns new :class:`Individual` objects and
leaves its inputs untouched, so member genomes and their fitted trees can be
shared between individuals without copying.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field, replace
from typing import Any, Sequence

import numpy as np

from evosample.data import Dataset, round_half_up
from evosample.errors import ConfigError
from evosample.tree import RegressionTree, fit

logger = logging.getLogger(__name__)


class Mode(str, enum.Enum):
    SUB_SAMPLING = "sub_sampling"
    SUB_SPACING = "sub_spacing"


class FitnessKind(str, enum.Enum):
    FEMPO = "fempo"
    FEMPT = "fempt"
    FEGT = "fegt"


class MutationOp(str, enum.Enum):
    DELETE = "delete"
    REPLACE = "replace"
    INSERT = "insert"


MUTATION_OPS = (MutationOp.DELETE, MutationOp.REPLACE, MutationOp.INSERT)


@dataclass(frozen=True)
class GenomeConfig:
    """Shape of an individual and of its mutations.

    Only ``ensemble_size`` comes from the published setup; the remaining
    defaults are this package's own choices and are echoed in every report.
    """

    mode: Mode = Mode.SUB_SAMPLING
    ensemble_size: int = 10
    bag_fraction: float = 1.0
    feature_fraction: float = 0.5
    private_test_fraction: float = 0.2
    mutation_intensity: float = 0.1
    floor_rows: int = 10
    floor_features: int = 1
    members_per_mutation: int = 1
    max_depth: int = 5

    def __post_init__(self) -> None:
        object.__setattr__(self, "mode", Mode(self.mode))
        for name in ("bag_fraction", "feature_fraction", "private_test_fraction",
                     "mutation_intensity"):
            value = getattr(self, name)
            if not 0.0 < value <= 1.0:
                raise ConfigError(f"{name} must be in (0, 1], got {value}")
        for name in ("ensemble_size", "floor_rows", "floor_features",
                     "members_per_mutation", "max_depth"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.ensemble_size < 3:
            raise ConfigError(
                f"ensemble_size must be >= 3 for two-point crossover, got {self.ensemble_size}"
            )
        if self.members_per_mutation > self.ensemble_size:
            raise ConfigError("members_per_mutation cannot exceed ensemble_size")


@dataclass(frozen=True, eq=False)
class MemberGenome:
    """One ensemble member: row bag, feature subset, private test rows, tree.

    ``bag`` is a sorted multiset of training-row ids; ``features`` and
    ``private_test`` are sorted and duplicate-free.
    """

    bag: np.ndarray
    features: tuple[int, ...]
    private_test: np.ndarray
    model: RegressionTree | None = None

    def __post_init__(self) -> None:
        bag = np.sort(np.asarray(self.bag, dtype=np.intp))
        private = np.unique(np.asarray(self.private_test, dtype=np.intp))
        bag.flags.writeable = False
        private.flags.writeable = False
        object.__setattr__(self, "bag", bag)
        object.__setattr__(self, "private_test", private)
        object.__setattr__(self, "features", tuple(sorted(int(f) for f in self.features)))

    def key(self) -> tuple:
        """Hashable content key; two members with equal keys hold the same sample."""
        return (self.bag.tobytes(), self.features, self.private_test.tobytes())

    def refit(self, train: Dataset, max_depth: int) -> "MemberGenome":
        return replace(self, model=fit(train, self.bag, self.features, max_depth))

    def to_json(self) -> dict[str, Any]:
        return {
            "bag": self.bag.tolist(),
            "features": list(self.features),
            "private_test": self.private_test.tolist(),
            "tree": None if self.model is None else self.model.to_dict(),
        }


@dataclass(frozen=True, eq=False)
class Individual:
    members: tuple[MemberGenome, ...]
    fitness: float | None = field(default=None)

    def __len__(self) -> int:
        return len(self.members)

    def with_fitness(self, value: float | None) -> "Individual":
        return Individual(self.members, value)

    def copy(self) -> "Individual":
        return Individual(self.members, self.fitness)

    def to_json(self) -> dict[str, Any]:
        return {
            "fitness": self.fitness,
            "members": [m.to_json() for m in self.members],
        }


def _draw_member(
    train: Dataset, cfg: GenomeConfig, fitness_kind: FitnessKind, rng: np.random.Generator
) -> MemberGenome:
    n, d = train.n_rows, train.n_cols
    if fitness_kind is FitnessKind.FEMPT:
        n_private = round_half_up(cfg.private_test_fraction * n)
        if n_private < 1 or n_private >= n:
            raise ConfigError(
                f"private_test_fraction={cfg.private_test_fraction} on {n} rows "
                "leaves an empty private test or no rows to bag"
            )
        perm = rng.permutation(n)
        private, eligible = perm[:n_private], np.sort(perm[n_private:])
    else:
        private, eligible = np.empty(0, dtype=np.intp), np.arange(n)

    n_bag = round_half_up(cfg.bag_fraction * eligible.size)
    if n_bag < max(1, cfg.floor_rows):
        raise ConfigError(
            f"bag_fraction={cfg.bag_fraction} yields {n_bag} rows, below "
            f"floor_rows={cfg.floor_rows}"
        )
    bag = eligible[rng.integers(0, eligible.size, size=n_bag)]

    if cfg.mode is Mode.SUB_SPACING:
        n_feat = min(d, max(1, cfg.floor_features, round_half_up(cfg.feature_fraction * d)))
        features = rng.choice(d, size=n_feat, replace=False)
    else:
        features = np.arange(d)
    return MemberGenome(bag, tuple(features), private).refit(train, cfg.max_depth)


def init_individual(
    train: Dataset, cfg: GenomeConfig, fitness_kind: FitnessKind, rng: np.random.Generator
) -> Individual:
    fitness_kind = FitnessKind(fitness_kind)
    members = tuple(_draw_member(train, cfg, fitness_kind, rng) for _ in range(cfg.ensemble_size))
    return Individual(members)


def perturbation_count(cfg: GenomeConfig, size: int) -> int:
    return max(1, round_half_up(cfg.mutation_intensity * size))


def _mutate_rows(
    member: MemberGenome, op: MutationOp, train: Dataset, cfg: GenomeConfig,
    rng: np.random.Generator,
) -> MemberGenome:
    bag = member.bag
    count = perturbation_count(cfg, bag.size)
    n_delete = 0
    if op in (MutationOp.DELETE, MutationOp.REPLACE):
        n_delete = min(count, max(0, bag.size - cfg.floor_rows))
        if n_delete:
            drop = rng.choice(bag.size, size=n_delete, replace=False)
            bag = np.delete(bag, drop)
    n_insert = count if op is MutationOp.INSERT else n_delete
    if op is not MutationOp.DELETE and n_insert:
        eligible = np.setdiff1d(np.arange(train.n_rows), member.private_test, assume_unique=True)
        bag = np.concatenate([bag, eligible[rng.integers(0, eligible.size, size=n_insert)]])
    return MemberGenome(bag, member.features, member.private_test)


def _mutate_features(
    member: MemberGenome, op: MutationOp, train: Dataset, cfg: GenomeConfig,
    rng: np.random.Generator,
) -> MemberGenome:
    feats = np.array(member.features, dtype=np.intp)
    count = perturbation_count(cfg, feats.size)
    n_delete = 0
    if op in (MutationOp.DELETE, MutationOp.REPLACE):
        n_delete = min(count, max(0, feats.size - cfg.floor_features))
        if n_delete:
            drop = rng.choice(feats.size, size=n_delete, replace=False)
            feats = np.delete(feats, drop)
    n_insert = count if op is MutationOp.INSERT else n_delete
    if op is not MutationOp.DELETE and n_insert:
        absent = np.setdiff1d(np.arange(train.n_cols), feats)
        n_insert = min(n_insert, absent.size)
        if n_insert:
            feats = np.concatenate([feats, rng.choice(absent, size=n_insert, replace=False)])
    return MemberGenome(member.bag, tuple(feats), member.private_test)


def mutate(
    ind: Individual,
    train: Dataset,
    cfg: GenomeConfig,
    rng: np.random.Generator,
    op: MutationOp | None = None,
) -> Individual:
    """Delete, replace or insert rows (sub-sampling) or features (sub-spacing).

    ``cfg.members_per_mutation`` distinct members are chosen uniformly; one
    operation is chosen uniformly unless ``op`` forces it. Only the touched
    members are refitted and the fitness cache is cleared.
    """
    targets = rng.choice(len(ind.members), size=cfg.members_per_mutation, replace=False)
    if op is None:
        op = MUTATION_OPS[int(rng.integers(len(MUTATION_OPS)))]
    op = MutationOp(op)
    perturb = _mutate_features if cfg.mode is Mode.SUB_SPACING else _mutate_rows
    members = list(ind.members)
    for t in sorted(int(i) for i in targets):
        members[t] = perturb(members[t], op, train, cfg, rng).refit(train, cfg.max_depth)
    return Individual(tuple(members))


def crossover_two_point(
    a: Individual,
    b: Individual,
    rng: np.random.Generator,
    cuts: tuple[int, int] | None = None,
) -> tuple[Individual, Individual]:
    """Swap the member segment ``[p, q)`` between two individuals.

    Cut points satisfy ``1 <= p < q <= K - 1`` and are drawn uniformly over
    all such pairs unless ``cuts`` is given. Members keep their trees.
    """
    k = len(a.members)
    if len(b.members) != k:
        raise ConfigError(f"crossover needs equal sizes, got {k} and {len(b.members)}")
    if k < 3:
        raise ConfigError(f"two-point crossover needs at least 3 members, got {k}")
    if cuts is None:
        n_pairs = (k - 1) * (k - 2) // 2
        r = int(rng.integers(n_pairs))
        for p in range(1, k - 1):
            span = k - 1 - p
            if r < span:
                cuts = (p, p + 1 + r)
                break
            r -= span
    p, q = cuts
    if not 1 <= p < q <= k - 1:
        raise ConfigError(f"invalid cut points {cuts} for {k} members")
    am, bm = a.members, b.members
    child_a = Individual(am[:p] + bm[p:q] + am[q:])
    child_b = Individual(bm[:p] + am[p:q] + bm[q:])
    return child_a, child_b


def member_keys(individuals: Sequence[Individual]) -> list[tuple]:
    return sorted(m.key() for ind in individuals for m in ind.members)
