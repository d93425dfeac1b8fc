"""Synthetic evaluation grid: over/under-call rates and location errors.

Each cell fixes ``(r_c, r_i, num_recomb)``. A trial simulates one
population and runs :func:`~recombsvd.detector.detect` on it. A trial
over-calls (false positive) when more hot spots are reported than were
simulated and under-calls (false negative) when fewer are. Location
errors are the distance to the nearest true breakpoint and are only
collected on trials with the correct count.
"""

from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .detector import METHODS, DetectorConfig, detect
from .errors import ConfigError, EmptyInputError
from .simgen import SimulationConfig, simulate

log = logging.getLogger(__name__)

RATE_LEVELS = {0.05: "low", 0.25: "high"}


@dataclass(frozen=True)
class ExperimentGrid:
    common_rates: tuple[float, ...] = (0.05, 0.25)
    individual_rates: tuple[float, ...] = (0.05, 0.25)
    recomb_counts: tuple[int, ...] = (0, 1, 2)
    trials: int = 20
    n: int = 100
    length: int = 1000
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    master_seed: int = 0
    # None draws breakpoints per trial; otherwise {num_recomb: locations}.
    fixed_locations: dict | None = None
    min_spacing: int | None = None  # defaults to 3 * window

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        for c in self.recomb_counts:
            if c not in (0, 1, 2):
                raise ConfigError(f"recombination counts must be 0, 1 or 2, got {c}")

    @property
    def spacing(self) -> int:
        return self.min_spacing if self.min_spacing is not None else 3 * self.detector.window

    def cells(self) -> list[tuple[float, float, int]]:
        return [
            (rc, ri, k)
            for rc in self.common_rates
            for ri in self.individual_rates
            for k in self.recomb_counts
        ]


def cell_name(r_c: float, r_i: float, num_recomb: int) -> str:
    level = lambda r: RATE_LEVELS.get(r, f"{r:g}")
    return f"{level(r_c)}-{level(r_i)}_{num_recomb}rec"


def trial_seeds(master_seed: int, cell: int, trial: int) -> tuple[int, int]:
    """Simulation and detector seeds for one trial, from (master, cell, trial)."""
    ss = np.random.SeedSequence([int(master_seed), int(cell), int(trial)])
    sim_seed, det_seed = ss.generate_state(2, dtype=np.uint32)
    return int(sim_seed), int(det_seed)


@dataclass
class TrialResult:
    cell: int
    trial: int
    sim_seed: int
    detector_seed: int
    truth: tuple[int, ...]
    called: int | None = None
    locations: dict = field(default_factory=dict)  # (method, vector) -> location
    duplicate: bool = False
    error: str | None = None


def run_trial(grid: ExperimentGrid, cell: int, trial: int) -> TrialResult:
    r_c, r_i, num_recomb = grid.cells()[cell]
    sim_seed, det_seed = trial_seeds(grid.master_seed, cell, trial)
    fixed = (grid.fixed_locations or {}).get(num_recomb)
    sim_config = SimulationConfig(
        n=grid.n, length=grid.length, r_c=r_c, r_i=r_i, num_recomb=num_recomb,
        recomb_locations=fixed, min_spacing=grid.spacing, seed=sim_seed,
    )
    result = TrialResult(cell, trial, sim_seed, det_seed, ())
    try:
        sim = simulate(sim_config)
        result.truth = sim.recomb_locations
        report = detect(sim.population, replace(grid.detector, seed=det_seed))
    except Exception as exc:  # recorded per trial, never dropped silently
        result.error = f"{type(exc).__name__}: {exc}"
        log.warning("cell %d trial %d failed: %s", cell, trial, result.error)
        return result
    result.called = report.number_of_hotspots
    for call in report.calls:
        for method in METHODS:
            result.locations[(method, call.vector_index)] = call.location(method)
    result.duplicate = any(c.duplicate_of is not None for c in report.calls)
    return result


@dataclass
class CellResult:
    r_c: float
    r_i: float
    num_recomb: int
    trials: int
    completed: int
    fp_count: int
    fn_count: int
    location_errors: dict  # (method, vector) -> list of errors
    duplicate_count: int
    duplicate_trials: int
    failures: list = field(default_factory=list)
    called_counts: list = field(default_factory=list)

    @property
    def name(self) -> str:
        return cell_name(self.r_c, self.r_i, self.num_recomb)

    @property
    def fp_rate(self) -> float:
        return self.fp_count / self.completed if self.completed else float("nan")

    @property
    def fn_rate(self) -> float | None:
        """None where under-calling is impossible (no true hot spots)."""
        if self.num_recomb == 0:
            return None
        return self.fn_count / self.completed if self.completed else float("nan")

    @property
    def duplicate_rate(self) -> float | None:
        if self.num_recomb < 2 or not self.duplicate_trials:
            return None
        return self.duplicate_count / self.duplicate_trials

    def errors(self, method: str, vector: int) -> list[float]:
        return self.location_errors.get((method, vector), [])


def score_cell(r_c, r_i, num_recomb, trials: list[TrialResult]) -> CellResult:
    done = [t for t in trials if t.error is None]
    errors: dict = {}
    dup_count = dup_trials = 0
    for t in done:
        if t.called != num_recomb:
            continue
        for (method, vector), loc in sorted(t.locations.items()):
            nearest = min(abs(loc - true) for true in t.truth)
            errors.setdefault((method, vector), []).append(float(nearest))
        if num_recomb >= 2:
            dup_trials += 1
            dup_count += int(t.duplicate)
    return CellResult(
        r_c, r_i, num_recomb,
        trials=len(trials),
        completed=len(done),
        fp_count=sum(t.called > num_recomb for t in done),
        fn_count=sum(t.called < num_recomb for t in done),
        location_errors=errors,
        duplicate_count=dup_count,
        duplicate_trials=dup_trials,
        failures=[(t.trial, t.error) for t in trials if t.error is not None],
        called_counts=[t.called for t in trials],
    )


def _run_trial_args(args):
    return run_trial(*args)


def run_grid(grid: ExperimentGrid, *, workers: int = 1, progress=None) -> list[CellResult]:
    """Simulate and score every cell; trials may run in ``workers`` processes."""
    jobs = [(grid, c, t) for c in range(len(grid.cells())) for t in range(grid.trials)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = []
            for res in pool.map(_run_trial_args, jobs, chunksize=1):
                results.append(res)
                if progress:
                    progress(res)
    else:
        results = []
        for job in jobs:
            res = run_trial(*job)
            results.append(res)
            if progress:
                progress(res)
    by_cell: dict[int, list[TrialResult]] = {}
    for res in results:
        by_cell.setdefault(res.cell, []).append(res)
    return [score_cell(*cell, by_cell.get(i, [])) for i, cell in enumerate(grid.cells())]


def ecdf(errors) -> list[tuple[float, float]]:
    """Right-continuous empirical CDF as ``(value, fraction <= value)`` steps."""
    values = np.sort(np.asarray(list(errors), dtype=np.float64))
    if values.size == 0:
        raise EmptyInputError("ecdf needs at least one value")
    uniq, counts = np.unique(values, return_counts=True)
    return [(float(v), float(c) / values.size) for v, c in zip(uniq, np.cumsum(counts))]


TABLE_COLUMNS = [
    "cell", "r_c", "r_i", "num_recomb", "trials", "completed", "failed",
    "fp_count", "fp_rate", "fn_count", "fn_rate",
    "duplicate_count", "duplicate_trials", "duplicate_rate",
]


def _fmt(x) -> str:
    if x is None:
        return "NA"
    if isinstance(x, float):
        return f"{x:.6g}"
    return str(x)


def table_rows(cells: list[CellResult]) -> list[dict]:
    return [
        {
            "cell": c.name, "r_c": c.r_c, "r_i": c.r_i, "num_recomb": c.num_recomb,
            "trials": c.trials, "completed": c.completed, "failed": len(c.failures),
            "fp_count": c.fp_count, "fp_rate": c.fp_rate,
            "fn_count": c.fn_count if c.num_recomb else None, "fn_rate": c.fn_rate,
            "duplicate_count": c.duplicate_count if c.num_recomb >= 2 else None,
            "duplicate_trials": c.duplicate_trials if c.num_recomb >= 2 else None,
            "duplicate_rate": c.duplicate_rate,
        }
        for c in cells
    ]


def write_table(cells: list[CellResult], fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(TABLE_COLUMNS)
    for row in table_rows(cells):
        writer.writerow([_fmt(row[col]) for col in TABLE_COLUMNS])


def manifest(grid: ExperimentGrid, cells: list[CellResult]) -> dict:
    return {
        "tool": {"name": "recombsvd", "version": __version__},
        "grid": {
            "common_rates": list(grid.common_rates),
            "individual_rates": list(grid.individual_rates),
            "recomb_counts": list(grid.recomb_counts),
            "trials": grid.trials,
            "n": grid.n,
            "length": grid.length,
            "master_seed": grid.master_seed,
            "breakpoint_mode": "fixed" if grid.fixed_locations else "random",
            "fixed_locations": {str(k): list(v) for k, v in (grid.fixed_locations or {}).items()},
            "breakpoint_range": [0.2 * grid.length, 0.8 * grid.length],
            "min_spacing": grid.spacing,
        },
        "detector": {k: v for k, v in asdict(grid.detector).items() if k not in ("seed", "threads")},
        "fp_definition": "trials calling more hot spots than simulated",
        "fn_definition": "trials calling fewer hot spots than simulated",
        "cells": [
            {
                "cell": c.name,
                "index": i,
                "trial_seeds": [list(trial_seeds(grid.master_seed, i, t)) for t in range(grid.trials)],
                "called_counts": c.called_counts,
                "failures": [{"trial": t, "error": e} for t, e in c.failures],
            }
            for i, c in enumerate(cells)
        ],
    }


def write_outputs(grid: ExperimentGrid, cells: list[CellResult], outdir) -> list[Path]:
    """``table.csv``, one ``ecdf_<cell>_<method>_v<k>.csv`` per error series, ``manifest.json``."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    path = outdir / "table.csv"
    with open(path, "w", newline="") as fh:
        write_table(cells, fh)
    written.append(path)
    for c in cells:
        for (method, vector), errs in sorted(c.location_errors.items()):
            path = outdir / f"ecdf_{c.name}_{method}_v{vector}.csv"
            with open(path, "w", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(["error", "fraction"])
                for value, frac in ecdf(errs):
                    writer.writerow([_fmt(value), _fmt(frac)])
            written.append(path)
    path = outdir / "manifest.json"
    path.write_text(json.dumps(manifest(grid, cells), indent=2) + "\n")
    written.append(path)
    return written
