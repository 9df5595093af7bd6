"""Repeated first-individual vs hall-of-fame experiments and benchmark grids."""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping

import numpy as np
import yaml

from evosample import __version__
from evosample.data import Dataset, load_csv, train_test_split
from evosample.errors import ConfigError, EvoSampleError
from evosample.evolve import GaConfig, evolve
from evosample.fitness import carve_holdout, predict_ensemble
from evosample.genome import FitnessKind, GenomeConfig, Mode
from evosample.stats import RunOutcome, aggregate_runs, mse

logger = logging.getLogger(__name__)

GA_KEYS = ("population_size", "generations", "tournament_size", "crossover_rate",
           "mutation_rate", "global_holdout_fraction", "mutation_exclusive")
GENOME_KEYS = tuple(f.name for f in dataclasses.fields(GenomeConfig) if f.name != "mode")
OVERRIDE_KEYS = GA_KEYS + GENOME_KEYS


def _norm(key: str) -> str:
    return key.replace("-", "_")


@dataclass(frozen=True)
class ExperimentSpec:
    data_path: str
    target_column: str
    mode: Mode = Mode.SUB_SAMPLING
    fitness: FitnessKind = FitnessKind.FEMPO
    test_fraction: float = 0.1
    runs: int = 100
    base_seed: int = 0
    ga: Mapping[str, Any] = field(default_factory=dict)
    output_path: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "fitness", FitnessKind(self.fitness))
        ga = {_norm(k): v for k, v in dict(self.ga).items()}
        unknown = sorted(set(ga) - set(OVERRIDE_KEYS))
        if unknown:
            raise ConfigError(f"unknown GA override(s): {', '.join(unknown)}")
        object.__setattr__(self, "ga", ga)
        if self.runs < 1:
            raise ConfigError(f"runs must be >= 1, got {self.runs}")
        if not 0.0 < self.test_fraction < 1.0:
            raise ConfigError(f"test_fraction must be in (0, 1), got {self.test_fraction}")
        self.ga_config(0)  # validates the overrides eagerly

    @classmethod
    def from_mapping(cls, raw: Mapping[str, Any]) -> "ExperimentSpec":
        """Build from a flat mapping; GA and genome keys may sit at top level."""
        raw = {_norm(k): v for k, v in raw.items() if v is not None}
        ga = dict(raw.pop("ga", None) or {})
        for key in OVERRIDE_KEYS:
            if key in raw:
                ga[key] = raw.pop(key)
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(raw) - names)
        if unknown:
            raise ConfigError(f"unknown experiment field(s): {', '.join(unknown)}")
        missing = [k for k in ("data_path", "target_column") if k not in raw]
        if missing:
            raise ConfigError(f"missing required field(s): {', '.join(missing)}")
        try:
            return cls(ga=ga, **raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    def ga_config(self, seed: int) -> GaConfig:
        genome_kw = {k: self.ga[k] for k in GENOME_KEYS if k in self.ga}
        ga_kw = {k: self.ga[k] for k in GA_KEYS if k in self.ga}
        return GaConfig(
            genome=GenomeConfig(mode=self.mode, **genome_kw),
            fitness=self.fitness,
            seed=seed,
            **ga_kw,
        )

    def echo(self) -> dict[str, Any]:
        """Every resolved parameter, defaults included."""
        cfg = self.ga_config(self.base_seed)
        genome = {k: getattr(cfg.genome, k) for k in GENOME_KEYS}
        return {
            "data_path": self.data_path,
            "target_column": self.target_column,
            "mode": self.mode.value,
            "fitness": self.fitness.value,
            "test_fraction": self.test_fraction,
            "runs": self.runs,
            "base_seed": self.base_seed,
            "seeds": [self.base_seed + i for i in range(self.runs)],
            "ga": {k: getattr(cfg, k) for k in GA_KEYS},
            "genome": genome,
        }


def run_seed(spec: ExperimentSpec, run_index: int) -> int:
    return spec.base_seed + run_index


def run_single(
    ds: Dataset,
    spec: ExperimentSpec,
    run_index: int,
    dump_dir: str | None = None,
    progress: bool = False,
) -> RunOutcome:
    """One split + evolution; a pure function of (dataset, spec, run_index).

    With ``dump_dir`` the first individual and the hall of fame are written
    there as ``run_<i>_fi.json`` and ``run_<i>_hof.json``.
    """
    seed = run_seed(spec, run_index)
    rng = np.random.default_rng(seed)
    cfg = spec.ga_config(seed)
    split = train_test_split(ds, spec.test_fraction, rng)
    train, holdout = split.train, None
    if cfg.fitness is FitnessKind.FEGT:
        train, holdout = carve_holdout(train, cfg.global_holdout_fraction, rng)
    result = evolve(train, cfg, rng, holdout=holdout, progress=progress)
    test = split.test
    fi_mse = mse(predict_ensemble(result.first_individual, test.features), test.target)
    hof_mse = mse(predict_ensemble(result.hall_of_fame, test.features), test.target)
    if dump_dir:
        os.makedirs(dump_dir, exist_ok=True)
        for tag, ind in (("fi", result.first_individual), ("hof", result.hall_of_fame)):
            with open(os.path.join(dump_dir, f"run_{run_index:03d}_{tag}.json"), "w") as fh:
                json.dump(ind.to_json(), fh, sort_keys=True)
    return RunOutcome(
        run_index=run_index,
        seed=seed,
        fi_test_mse=fi_mse,
        hof_test_mse=hof_mse,
        fi_fitness=result.first_individual.fitness,
        gen0_best_fitness=result.gen0_best,
        hof_fitness=result.hall_of_fame.fitness,
        n_train=split.train.n_rows,
        n_test=test.n_rows,
    )


def _run_tagged(args: tuple[Dataset, ExperimentSpec, int, str | None, bool]) -> RunOutcome:
    ds, spec, i, dump_dir, progress = args
    try:
        return run_single(ds, spec, i, dump_dir, progress)
    except EvoSampleError as exc:
        raise type(exc)(f"run {i} (seed {run_seed(spec, i)}): {exc}") from exc


def run_experiment(
    spec: ExperimentSpec,
    jobs: int = 1,
    dataset: Dataset | None = None,
    dump_dir: str | None = None,
    progress: bool = False,
) -> dict[str, Any]:
    """Execute all runs and return the report document (a JSON-ready dict).

    ``jobs > 1`` spreads runs over worker processes. Each run is seeded
    only by its index, so the report does not depend on ``jobs``.
    """
    started = time.perf_counter()
    ds = dataset if dataset is not None else load_csv(spec.data_path, spec.target_column)
    tasks = [(ds, spec, i, dump_dir, progress) for i in range(spec.runs)]
    if jobs > 1 and spec.runs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_run_tagged, tasks))
    else:
        outcomes = [_run_tagged(t) for t in tasks]
    aggregate = aggregate_runs(outcomes).to_json() if len(outcomes) >= 2 else None
    first = outcomes[0]
    return {
        "tool": {"name": "evosample", "version": __version__},
        "spec": spec.echo(),
        "dataset": {
            "n_rows": ds.n_rows,
            "n_cols": ds.n_cols,
            "feature_names": list(ds.feature_names),
            "n_train": first.n_train,
            "n_test": first.n_test,
        },
        "runs": [o.to_json() for o in outcomes],
        "aggregate": aggregate,
        "wall_clock_seconds": time.perf_counter() - started,
    }


def dumps_report(report: Mapping[str, Any]) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def write_report(report: Mapping[str, Any], path: str | os.PathLike) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as fh:
        fh.write(dumps_report(report))


def runs_csv(report: Mapping[str, Any]) -> str:
    buf = io.StringIO()
    fields = list(RunOutcome.__dataclass_fields__)
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for row in report["runs"]:
        writer.writerow(row)
    return buf.getvalue()


def load_config(path: str | os.PathLike) -> dict[str, Any]:
    """Read a YAML (or JSON) mapping."""
    try:
        with open(path) as fh:
            doc = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    if doc is None:
        return {}
    if not isinstance(doc, dict):
        raise ConfigError(f"config {path} must be a mapping")
    return doc


# Column order of the published results table; anything else is appended.
TABLE_COLUMNS = (
    (Mode.SUB_SAMPLING, FitnessKind.FEMPO),
    (Mode.SUB_SAMPLING, FitnessKind.FEMPT),
    (Mode.SUB_SAMPLING, FitnessKind.FEGT),
    (Mode.SUB_SPACING, FitnessKind.FEMPO),
    (Mode.SUB_SPACING, FitnessKind.FEGT),
    (Mode.SUB_SPACING, FitnessKind.FEMPT),
)


@dataclass
class CellResult:
    dataset: str
    mode: Mode
    fitness: FitnessKind
    report: dict[str, Any] | None
    error: str | None = None
    report_path: str | None = None


def grid_cells(grid: Mapping[str, Any], base_dir: str = ".") -> list[tuple[str, ExperimentSpec]]:
    """Expand a grid document into (dataset name, spec) pairs.

    Layout::

        runs: 100            # default for every cell
        base_seed: 0
        overrides: {...}     # GA/genome keys applied to every cell
        datasets:
          - {name: Boston, path: boston.csv, target: MEDV, test_fraction: 0.1}
        cells:
          - {dataset: Boston, mode: sub_spacing, fitness: fempo, runs: 50}

    Relative dataset paths resolve against ``base_dir``.
    """
    cells = grid.get("cells") or []
    if not cells:
        raise ConfigError("no cells")
    datasets = {}
    for entry in grid.get("datasets") or []:
        if "name" not in entry or "path" not in entry or "target" not in entry:
            raise ConfigError(f"dataset entry needs name, path and target: {entry}")
        datasets[entry["name"]] = entry
    defaults = {k: grid[k] for k in ("runs", "base_seed", "test_fraction") if k in grid}
    shared = dict(grid.get("overrides") or {})
    out = []
    for cell in cells:
        cell = dict(cell)
        name = cell.pop("dataset", None)
        if name not in datasets:
            raise ConfigError(f"cell refers to unknown dataset {name!r}")
        entry = datasets[name]
        path = entry["path"]
        if not os.path.isabs(path):
            path = os.path.normpath(os.path.join(base_dir, path))
        raw = {**defaults, "data_path": path, "target_column": entry["target"]}
        if "test_fraction" in entry:
            raw["test_fraction"] = entry["test_fraction"]
        raw.update({k: v for k, v in cell.items() if k != "overrides"})
        raw["ga"] = {**shared, **(entry.get("overrides") or {}), **(cell.get("overrides") or {})}
        out.append((name, ExperimentSpec.from_mapping(raw)))
    return out


def run_benchmark(
    grid: Mapping[str, Any],
    output_dir: str | None = None,
    base_dir: str = ".",
    jobs: int = 1,
) -> list[CellResult]:
    results = []
    datasets: dict[tuple[str, str], Dataset] = {}
    for name, spec in grid_cells(grid, base_dir):
        try:
            key = (spec.data_path, spec.target_column)
            if key not in datasets:
                datasets[key] = load_csv(spec.data_path, spec.target_column)
            report = run_experiment(spec, jobs=jobs, dataset=datasets[key])
            result = CellResult(name, spec.mode, spec.fitness, report)
        except EvoSampleError as exc:
            logger.error("cell %s/%s/%s failed: %s", name, spec.mode.value, spec.fitness.value, exc)
            result = CellResult(name, spec.mode, spec.fitness, None, error=str(exc))
        if output_dir and result.report is not None:
            fname = f"{name}_{spec.mode.value}_{spec.fitness.value}.json".replace(" ", "_")
            result.report_path = os.path.join(output_dir, fname)
            write_report(result.report, result.report_path)
        results.append(result)
    return results


def _fmt(x: float, digits: int = 2) -> str:
    return f"{x:.{digits}f}"


def summary_rows(results: Iterable[CellResult]) -> list[dict[str, Any]]:
    rows = []
    for r in results:
        agg = (r.report or {}).get("aggregate") or {}
        rows.append({
            "dataset": r.dataset,
            "mode": r.mode.value,
            "fitness": r.fitness.value,
            "n_runs": agg.get("n_runs"),
            "hof_mean": agg.get("hof_mean"),
            "hof_std": agg.get("hof_std"),
            "fi_mean": agg.get("fi_mean"),
            "fi_std": agg.get("fi_std"),
            "win_percent": agg.get("win_percent"),
            "p_value": agg.get("p_value"),
            "status": "ok" if r.error is None else f"error: {r.error}",
        })
    return rows


def summary_csv(results: Iterable[CellResult]) -> str:
    rows = summary_rows(results)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]) if rows else ["dataset"],
                            lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def summary_table(results: Iterable[CellResult]) -> str:
    """Aligned text table: one block of four lines per dataset, one column per cell."""
    results = list(results)
    present = {(r.mode, r.fitness) for r in results}
    columns = [c for c in TABLE_COLUMNS if c in present]
    by_key = {(r.dataset, r.mode, r.fitness): r for r in results}
    names = list(dict.fromkeys(r.dataset for r in results))

    header = ["Data Set", "Parameters"] + [
        f"{'Sub-sampling' if m is Mode.SUB_SAMPLING else 'Sub-spacing'} {f.value.upper()}"
        for m, f in columns
    ]
    lines = [header]
    for name in names:
        block = {
            "HOF - Mean (Std. Dev.)": [],
            "FI - Mean (Std. Dev.)": [],
            "Win (%)": [],
            "p-value": [],
        }
        for mode, fit in columns:
            r = by_key.get((name, mode, fit))
            agg = (r.report or {}).get("aggregate") if r else None
            if r is None:
                cells = ["-"] * 4
            elif agg is None:
                cells = ["error" if r.error else "n/a"] * 4
            else:
                cells = [
                    f"{_fmt(agg['hof_mean'])} ({_fmt(agg['hof_std'])})",
                    f"{_fmt(agg['fi_mean'])} ({_fmt(agg['fi_std'])})",
                    f"{agg['win_percent']:.0f}",
                    f"{agg['p_value']:.3g}",
                ]
            for label, cell in zip(block, cells):
                block[label].append(cell)
        for i, (label, cells) in enumerate(block.items()):
            lines.append([name if i == 0 else "", label] + cells)
    widths = [max(len(row[j]) for row in lines) for j in range(len(header))]
    rendered = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in lines]
    rendered.insert(1, "-" * len(rendered[0]))
    return "\n".join(rendered) + "\n"
