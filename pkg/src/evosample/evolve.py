"""Generational GA: tournament selection, two-point crossover, mutation, hall of fame."""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from evosample.data import Dataset
from evosample.errors import ConfigError, InvariantError
from evosample.fitness import DEFAULT_HOLDOUT_FRACTION, FitnessContext, carve_holdout, evaluate
from evosample.genome import (
    FitnessKind,
    GenomeConfig,
    Individual,
    crossover_two_point,
    init_individual,
    mutate,
)


@dataclass(frozen=True)
class GaConfig:
    population_size: int = 30
    generations: int = 30
    tournament_size: int = 3
    crossover_rate: float = 0.6
    mutation_rate: float = 0.4
    genome: GenomeConfig = field(default_factory=GenomeConfig)
    fitness: FitnessKind = FitnessKind.FEMPO
    global_holdout_fraction: float = DEFAULT_HOLDOUT_FRACTION
    # When True, individuals produced by crossover are not mutated in the same
    # generation; when False every individual is a mutation candidate.
    mutation_exclusive: bool = True
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "fitness", FitnessKind(self.fitness))
        if self.population_size < 2:
            raise ConfigError(f"population_size must be >= 2, got {self.population_size}")
        if self.generations < 0:
            raise ConfigError(f"generations must be >= 0, got {self.generations}")
        if self.tournament_size < 1:
            raise ConfigError(f"tournament_size must be >= 1, got {self.tournament_size}")
        for name in ("crossover_rate", "mutation_rate"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f"{name} must be in [0, 1], got {value}")
        if not 0.0 < self.global_holdout_fraction < 1.0:
            raise ConfigError(
                f"global_holdout_fraction must be in (0, 1), got {self.global_holdout_fraction}"
            )


@dataclass(frozen=True)
class GenerationStats:
    generation: int
    best: float
    mean: float
    hof: float


@dataclass(frozen=True)
class EvolutionResult:
    first_individual: Individual
    hall_of_fame: Individual
    history: tuple[GenerationStats, ...]
    context: FitnessContext

    @property
    def gen0_best(self) -> float:
        return self.history[0].best


def tournament_select(
    population: Sequence[Individual], k: int, rng: np.random.Generator
) -> Individual:
    """Best of ``k`` contestants drawn with replacement; earliest draw wins ties."""
    if not population:
        raise ValueError("cannot select from an empty population")
    draws = rng.integers(0, len(population), size=k)
    winner = None
    for i in draws:
        contestant = population[int(i)]
        if contestant.fitness is None:
            raise ValueError("tournament encountered an unevaluated individual")
        if winner is None or contestant.fitness < winner.fitness:
            winner = contestant
    return winner.copy()


def _stats(generation: int, population: Sequence[Individual], hof: Individual) -> GenerationStats:
    fits = [ind.fitness for ind in population]
    total = 0.0
    for f in fits:
        total += f
    return GenerationStats(generation, min(fits), total / len(fits), hof.fitness)


def _argmin(population: Sequence[Individual]) -> Individual:
    best = population[0]
    for ind in population[1:]:
        if ind.fitness < best.fitness:
            best = ind
    return best


def evolve(
    train: Dataset,
    cfg: GaConfig,
    rng: np.random.Generator | None = None,
    holdout: Dataset | None = None,
    progress: bool = False,
) -> EvolutionResult:
    """Run the GA for ``cfg.generations`` generations after generation 0.

    Under FEGT a global holdout is carved from ``train`` first unless one is
    supplied; members then only ever bag the remaining rows.
    """
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    if cfg.fitness is FitnessKind.FEGT and holdout is None:
        train, holdout = carve_holdout(train, cfg.global_holdout_fraction, rng)
    ctx = FitnessContext(train, holdout if cfg.fitness is FitnessKind.FEGT else None)
    n = cfg.population_size

    population = [init_individual(train, cfg.genome, cfg.fitness, rng) for _ in range(n)]
    population = [evaluate(ind, cfg.fitness, ctx) for ind in population]
    first = population[0]
    hof = _argmin(population)
    history = [_stats(0, population, hof)]
    if progress:
        _report(history[-1])

    for gen in range(1, cfg.generations + 1):
        offspring = [tournament_select(population, cfg.tournament_size, rng) for _ in range(n)]
        touched = [False] * n
        for i in range(0, n - 1, 2):
            if rng.random() < cfg.crossover_rate:
                offspring[i], offspring[i + 1] = crossover_two_point(
                    offspring[i], offspring[i + 1], rng
                )
                touched[i] = touched[i + 1] = True
        for i in range(n):
            if cfg.mutation_exclusive and touched[i]:
                continue
            if rng.random() < cfg.mutation_rate:
                offspring[i] = mutate(offspring[i], train, cfg.genome, rng)
        population = [evaluate(ind, cfg.fitness, ctx) for ind in offspring]
        if len(population) != n:
            raise InvariantError(f"population size drifted to {len(population)}")
        best = _argmin(population)
        if best.fitness < hof.fitness:
            hof = best
        history.append(_stats(gen, population, hof))
        if progress:
            _report(history[-1])

    return EvolutionResult(first, hof, tuple(history), ctx)


def _report(stats: GenerationStats) -> None:
    print(f"gen={stats.generation} best={stats.best:.6g} mean={stats.mean:.6g}", file=sys.stderr)
