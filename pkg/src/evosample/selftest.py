"""Deterministic invariant suite behind ``evosample selftest``.

Each check returns a :class:`CheckResult`; none of them needs external data.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable

import numpy as np

from evosample.data import Dataset, make_synthetic
from evosample.evolve import GaConfig, evolve
from evosample.experiment import ExperimentSpec, dumps_report, run_experiment
from evosample.fitness import oob_rows
from evosample.genome import (
    FitnessKind,
    GenomeConfig,
    Mode,
    crossover_two_point,
    init_individual,
    member_keys,
    mutate,
)
from evosample.oracles import (
    exhaustive_tree,
    oob_rows_bruteforce,
    t_two_sided_p_quadrature,
    trees_match,
)
from evosample.schema import validate_report
from evosample.stats import paired_t_test, student_t_two_sided_p
from evosample.tree import fit

T_GRID = (0.0, 0.1, 0.5, 1.0, 1.5, 2.0, 3.0, 5.0, 10.0)
T_TEST_ATOL = 1e-8
SMALL_GENOME = dict(ensemble_size=4, floor_rows=5, max_depth=3)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


def check_hof_monotone(n_runs: int = 20) -> CheckResult:
    bad = []
    for seed in range(n_runs):
        rng = np.random.default_rng(seed)
        ds = make_synthetic(60, 4, 0.2, rng)
        mode = Mode.SUB_SPACING if seed % 2 else Mode.SUB_SAMPLING
        kind = list(FitnessKind)[seed % 3]
        cfg = GaConfig(population_size=8, generations=6, fitness=kind,
                       genome=GenomeConfig(mode=mode, **SMALL_GENOME), seed=seed)
        result = evolve(ds, cfg, rng)
        hof = [g.hof for g in result.history]
        all_best = min(g.best for g in result.history)
        if any(b > a for a, b in zip(hof, hof[1:])) or result.hall_of_fame.fitness != all_best:
            bad.append(seed)
    return CheckResult("hof_monotone", not bad,
                       f"{n_runs} seeded runs, violations at seeds {bad}" if bad
                       else f"{n_runs} seeded runs non-increasing")


def check_crossover_conservation(n: int = 1000) -> CheckResult:
    rng = np.random.default_rng(12345)
    ds = make_synthetic(30, 3, 0.1, rng)
    cfg = GenomeConfig(mode=Mode.SUB_SPACING, ensemble_size=10, floor_rows=5, max_depth=2)
    pool = [init_individual(ds, cfg, FitnessKind.FEMPO, rng) for _ in range(8)]
    failures = 0
    for seed in range(n):
        r = np.random.default_rng(seed)
        i, j = r.integers(len(pool), size=2)
        a, b = pool[i], pool[j]
        ca, cb = crossover_two_point(a, b, r)
        same_objects = sorted(map(id, a.members + b.members)) == sorted(map(id, ca.members + cb.members))
        if not same_objects or member_keys([a, b]) != member_keys([ca, cb]):
            failures += 1
    return CheckResult("crossover_conservation", failures == 0,
                       f"{n} crossovers, {failures} violated conservation")


def check_oob_isolation(n: int = 1000) -> CheckResult:
    violations = 0
    for seed in range(n):
        rng = np.random.default_rng(seed)
        ds = make_synthetic(40, 3, 0.1, rng)
        kind = FitnessKind.FEMPT if seed % 2 else FitnessKind.FEMPO
        mode = Mode.SUB_SPACING if seed % 4 >= 2 else Mode.SUB_SAMPLING
        cfg = GenomeConfig(mode=mode, ensemble_size=3, floor_rows=5, max_depth=1,
                           mutation_intensity=0.3)
        ind = init_individual(ds, cfg, kind, rng)
        ind = mutate(ind, ds, cfg, rng)
        for m in ind.members:
            bag = set(m.bag.tolist())
            rows = oob_rows(m, ds.n_rows)
            if bag & set(rows.tolist()):
                violations += 1
            if rows.tolist() != oob_rows_bruteforce(m.bag, m.private_test, ds.n_rows):
                violations += 1
            if bag & set(m.private_test.tolist()):
                violations += 1
            if kind is FitnessKind.FEMPO and m.private_test.size:
                violations += 1
    return CheckResult("oob_isolation", violations == 0,
                       f"{n} individuals, {violations} isolation violations")


def random_tree_case(rng: np.random.Generator) -> tuple[Dataset, np.ndarray, list[int], int]:
    n_rows = int(rng.integers(2, 13))
    n_cols = int(rng.integers(1, 4))
    # Small integer grids make ties and repeated values common.
    x = rng.integers(0, 4, size=(n_rows, n_cols)).astype(float)
    y = rng.integers(0, 5, size=n_rows).astype(float)
    if rng.random() < 0.5:
        y = y + rng.random(n_rows)
    ds = Dataset(x, y, tuple(f"x{j}" for j in range(n_cols)))
    rows = rng.integers(0, n_rows, size=int(rng.integers(1, 13)))
    if rng.random() < 0.5:
        rows = np.arange(n_rows)
    n_feat = int(rng.integers(1, n_cols + 1))
    feats = sorted(rng.choice(n_cols, size=n_feat, replace=False).tolist())
    depth = int(rng.integers(1, 3))
    return ds, rows, feats, depth


def check_tree_oracle(n: int = 200) -> CheckResult:
    mismatches = []
    for seed in range(n):
        ds, rows, feats, depth = random_tree_case(np.random.default_rng(seed))
        tree = fit(ds, rows, feats, depth)
        expected = exhaustive_tree(ds.features, ds.target, rows, feats, depth)
        if not trees_match(tree.to_dict(), expected):
            mismatches.append(seed)
    return CheckResult("tree_oracle", not mismatches,
                       f"{n} random datasets, mismatches at seeds {mismatches}" if mismatches
                       else f"{n} random datasets matched node-for-node")


def check_t_test_oracle() -> CheckResult:
    worst = 0.0
    n = 0
    for df in range(1, 201):
        for t in T_GRID:
            expected = t_two_sided_p_quadrature(t, df)
            for sign in (1.0, -1.0):
                worst = max(worst, abs(student_t_two_sided_p(sign * t, df) - expected))
                n += 1
    # Paired tests built to hit known t values exercise the full path.
    d = np.array([1.1, 0.9, 1.3, 0.7, 1.0, 1.2, 0.8, 1.05, 0.95, 1.0])
    res = paired_t_test(d, np.zeros_like(d))
    worst = max(worst, abs(res.p - t_two_sided_p_quadrature(res.t, res.df)))
    return CheckResult("t_test_oracle", worst <= T_TEST_ATOL,
                       f"{n + 1} (t, df) points, max |p - quadrature| = {worst:.2e}")


def determinism_spec(path: str) -> ExperimentSpec:
    return ExperimentSpec(
        data_path=path, target_column="y", mode=Mode.SUB_SPACING, fitness=FitnessKind.FEGT,
        runs=3, base_seed=7,
        ga=dict(population_size=6, generations=3, ensemble_size=4, floor_rows=5),
    )


def check_end_to_end_determinism() -> CheckResult:
    import os
    import tempfile

    from evosample.data import write_csv

    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "synth.csv")
        write_csv(make_synthetic(80, 4, 0.3, np.random.default_rng(3)), path)
        spec = determinism_spec(path)
        texts = []
        for _ in range(2):
            report = run_experiment(spec)
            validate_report(json.loads(dumps_report(report)))
            report["wall_clock_seconds"] = 0.0
            texts.append(dumps_report(report))
    same = texts[0] == texts[1]
    return CheckResult("end_to_end_determinism", same,
                       "reports byte-identical modulo wall clock" if same else "reports differ")


CHECKS: dict[str, Callable[[], CheckResult]] = {
    "hof_monotone": check_hof_monotone,
    "crossover_conservation": check_crossover_conservation,
    "oob_isolation": check_oob_isolation,
    "tree_oracle": check_tree_oracle,
    "t_test_oracle": check_t_test_oracle,
    "end_to_end_determinism": check_end_to_end_determinism,
}


def run_all() -> list[CheckResult]:
    return [check() for check in CHECKS.values()]
