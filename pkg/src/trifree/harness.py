"""Run drivers: single runs, sweeps, audits, and their file outputs.

Outputs are plain files: `checkpoints.csv` (one row per trajectory
checkpoint), `edges.log` (one line per insertion, `step u v`), and
`summary.json`.  Sweeps add `sweep.csv` (one row per run, errors
included) and `sweep_summary.json` (per-n aggregates).  All schemas
carry a schema_version field or header so downstream tooling can detect
drift.

Determinism: a run is a pure function of (n, seed, stop); measurement
sampling (checkpoint pairs, placements, local search restarts) uses a
separate RNG derived from the seed, so it never perturbs the edge
sequence.  Sweeps derive per-run seeds as base_seed + run_index, which
makes parallel and serial execution byte-identical.
"""

from __future__ import annotations

import csv
import json
import math
import time
import random
from dataclasses import dataclass, field, replace
from multiprocessing import Pool
from pathlib import Path
from statistics import fmean, pstdev

from .oracle import equivalence_tv
from .patterns import (
    FirstAppearanceTracker,
    Pattern,
    blocked_placements,
    load_pattern_file,
)
from .process import (
    AuditReport,
    ProcessState,
    Saturation,
    StepResult,
    Steps,
    TimeLimit,
    StopCondition,
)
from .trajectory import (
    CHECKPOINT_COLUMNS,
    Checkpoint,
    TrajectoryParams,
    checkpoint_row,
    default_cadence,
    grid_steps,
    grid_times,
    take_checkpoint,
)

SCHEMA_VERSION = "1"
DEFAULT_SEED = 1729
# measurement RNG seed is derived from the run seed with this fixed mask
MEASUREMENT_SEED_XOR = 0x9E3779B9
DEFAULT_Y_SAMPLES = 200
DEFAULT_PLACEMENT_SAMPLES = 10_000
SWEEP_GRID = (0.2, 0.4, 0.6, 0.8, 1.0)


@dataclass(frozen=True)
class Horizon:
    """Stop after a multiple of the tracking horizon m(n)."""

    multiplier: float = 1.0


def measurement_rng(seed: int) -> random.Random:
    return random.Random(seed ^ MEASUREMENT_SEED_XOR)


def parse_stop(text: str) -> StopCondition | Horizon:
    """Parse `saturation`, `steps:K`, or `horizon:X`."""
    if text == "saturation":
        return Saturation()
    kind, _, value = text.partition(":")
    if kind == "steps" and value:
        limit = int(value)
        if limit < 0:
            raise ValueError(f"steps limit must be >= 0, got {limit}")
        return Steps(limit)
    if kind == "horizon" and value:
        mult = float(value)
        if mult <= 0:
            raise ValueError(f"horizon multiplier must be > 0, got {mult}")
        return Horizon(mult)
    raise ValueError(
        f"unrecognised stop condition {text!r}; "
        f"expected saturation, steps:K, or horizon:X"
    )


def stop_label(stop: StopCondition | Horizon) -> str:
    if isinstance(stop, Saturation):
        return "saturation"
    if isinstance(stop, Steps):
        return f"steps:{stop.limit}"
    if isinstance(stop, Horizon):
        return f"horizon:{stop.multiplier:g}"
    if isinstance(stop, TimeLimit):
        return f"time:{stop.t_max:g}"
    raise TypeError(f"unknown stop condition {stop!r}")


@dataclass(frozen=True)
class RunConfig:
    """Everything needed to reproduce one run."""

    n: int
    seed: int = DEFAULT_SEED
    stop: StopCondition | Horizon = Saturation()
    checkpoint_every: int | None = None  # None: ceil(m / 50)
    y_sample_count: int = DEFAULT_Y_SAMPLES
    patterns: tuple[str, ...] = ()  # pattern file paths
    record_frozen_y: bool = False
    placement_samples: int = DEFAULT_PLACEMENT_SAMPLES
    pattern_until_horizon: bool = False

    def validate(self) -> None:
        if self.n < 2:
            raise ValueError(f"n must be at least 2, got {self.n}")
        if self.checkpoint_every is not None and self.checkpoint_every < 1:
            raise ValueError("checkpoint_every must be >= 1")
        if self.y_sample_count < 0:
            raise ValueError("y_sample_count must be >= 0")
        if self.placement_samples < 1:
            raise ValueError("placement_samples must be >= 1")


@dataclass(frozen=True)
class RunSummary:
    schema_version: str
    n: int
    seed: int
    stop: str
    final_step: int
    saturated: bool
    final_edge_count: int
    horizon: int
    blocking_window_start: int  # ceil(n^(4/3)); empty window at small n
    first_appearance: dict[str, int | None]
    blocked_fraction_at_horizon: dict[str, float | None]
    checkpoint_path: str | None
    duration_seconds: float

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "n": self.n,
            "seed": self.seed,
            "stop": self.stop,
            "final_step": self.final_step,
            "saturated": self.saturated,
            "final_edge_count": self.final_edge_count,
            "horizon": self.horizon,
            "blocking_window_start": self.blocking_window_start,
            "first_appearance": dict(self.first_appearance),
            "blocked_fraction_at_horizon": dict(self.blocked_fraction_at_horizon),
            "checkpoint_path": self.checkpoint_path,
            "duration_seconds": self.duration_seconds,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunSummary":
        return cls(
            schema_version=data["schema_version"],
            n=data["n"],
            seed=data["seed"],
            stop=data["stop"],
            final_step=data["final_step"],
            saturated=data["saturated"],
            final_edge_count=data["final_edge_count"],
            horizon=data["horizon"],
            blocking_window_start=data["blocking_window_start"],
            first_appearance=dict(data["first_appearance"]),
            blocked_fraction_at_horizon=dict(data["blocked_fraction_at_horizon"]),
            checkpoint_path=data["checkpoint_path"],
            duration_seconds=data["duration_seconds"],
        )


@dataclass
class RunResult:
    summary: RunSummary
    checkpoints: list[Checkpoint]
    state: ProcessState
    trackers: list[FirstAppearanceTracker]
    horizon_reports: dict[str, object] = field(default_factory=dict)


def _resolve_stop(stop: StopCondition | Horizon, horizon: int) -> StopCondition:
    if isinstance(stop, Horizon):
        return Steps(int(stop.multiplier * horizon))
    return stop


def load_patterns(paths: tuple[str, ...] | list[str]) -> list[Pattern]:
    patterns = []
    names: set[str] = set()
    for path in paths:
        pattern = load_pattern_file(str(path))
        if pattern.label in names:  # disambiguate duplicate file stems
            pattern = replace(pattern, name=f"{pattern.label}-{len(patterns)}")
        names.add(pattern.label)
        patterns.append(pattern)
    return patterns


def run_simulation(
    config: RunConfig,
    *,
    trackers: list[FirstAppearanceTracker] | None = None,
    at_horizon=None,
) -> RunResult:
    """Execute one run with checkpoints, pattern tracking, and horizon hooks.

    `trackers` overrides the trackers built from config.patterns (used by
    tests and sweeps that construct patterns programmatically).
    `at_horizon(state)` fires once when the run reaches the tracking
    horizon, with the state quiescent.
    """
    config.validate()
    started = time.perf_counter()
    params = TrajectoryParams(config.n)
    horizon = params.horizon
    state = ProcessState(config.n, config.seed, record_frozen_y=config.record_frozen_y)
    rng = measurement_rng(config.seed)

    if trackers is None:
        until = horizon if config.pattern_until_horizon else None
        trackers = [
            FirstAppearanceTracker(p, until_step=until)
            for p in load_patterns(config.patterns)
        ]

    cadence = config.checkpoint_every or default_cadence(horizon)
    grid = grid_steps(config.n, grid_times())
    checkpoints = [take_checkpoint(state, params, config.y_sample_count, rng)]
    blocked_at_horizon: dict[str, float | None] = {
        t.pattern.label: None for t in trackers
    }

    def hook(st: ProcessState, result: StepResult) -> None:
        i = st.steps
        u, v = result.chosen
        for tracker in trackers:
            tracker.offer(st.adjacency, u, v, i)
        if i == horizon:
            for tracker in trackers:
                if tracker.pattern.k <= st.n:
                    report = blocked_placements(
                        st, tracker.pattern, config.placement_samples, rng
                    )
                    blocked_at_horizon[tracker.pattern.label] = (
                        report.fraction_blocked
                    )
            if at_horizon is not None:
                at_horizon(st)
        if i % cadence == 0 or i in grid:
            checkpoints.append(take_checkpoint(st, params, config.y_sample_count, rng))

    outcome = state.run(_resolve_stop(config.stop, horizon), on_step=hook)
    if checkpoints[-1].step != outcome.steps:
        checkpoints.append(take_checkpoint(state, params, config.y_sample_count, rng))

    summary = RunSummary(
        schema_version=SCHEMA_VERSION,
        n=config.n,
        seed=config.seed,
        stop=stop_label(config.stop),
        final_step=outcome.steps,
        saturated=outcome.saturated,
        final_edge_count=len(state.edge_log),
        horizon=horizon,
        blocking_window_start=math.ceil(config.n ** (4 / 3)),
        first_appearance={t.pattern.label: t.first_step for t in trackers},
        blocked_fraction_at_horizon=blocked_at_horizon,
        checkpoint_path=None,
        duration_seconds=time.perf_counter() - started,
    )
    return RunResult(
        summary=summary, checkpoints=checkpoints, state=state, trackers=trackers
    )


# ----------------------------------------------------------------------
# file output

def write_checkpoints_csv(path: Path, checkpoints: list[Checkpoint]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CHECKPOINT_COLUMNS)
        for cp in checkpoints:
            writer.writerow(checkpoint_row(cp))


def write_edge_log(path: Path, edge_log: list[tuple[int, int]]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for step, (u, v) in enumerate(edge_log, start=1):
            fh.write(f"{step} {u} {v}\n")


def write_run_artifacts(result: RunResult, out_dir: Path) -> RunSummary:
    """Write checkpoints.csv, edges.log, and summary.json; returns the summary."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    checkpoint_path = out_dir / "checkpoints.csv"
    write_checkpoints_csv(checkpoint_path, result.checkpoints)
    write_edge_log(out_dir / "edges.log", result.state.edge_log)
    summary = replace(result.summary, checkpoint_path=str(checkpoint_path))
    with open(out_dir / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    result.summary = summary
    return summary


def cmd_run(config: RunConfig, out_dir: Path) -> RunSummary:
    """Single run entry point: validate patterns first, then simulate and write."""
    load_patterns(config.patterns)  # fail before simulating on bad files
    result = run_simulation(config)
    return write_run_artifacts(result, out_dir)


# ----------------------------------------------------------------------
# sweeps

SWEEP_COLUMNS = (
    "n",
    "seed",
    "status",
    "error",
    "final_step",
    "saturated",
    "final_edges",
    "c_n",
    *(f"rel_q_t{t:g}" for t in SWEEP_GRID),
    *(f"rel_y_t{t:g}" for t in SWEEP_GRID),
)


def _gridpoint_residuals(
    checkpoints: list[Checkpoint], n: int
) -> dict[float, tuple[float | None, float | None]]:
    """rel_q and rel_y at each sweep gridpoint reached by the run."""
    steps = grid_steps(n, list(SWEEP_GRID))
    by_step = {cp.step: cp for cp in checkpoints}
    out: dict[float, tuple[float | None, float | None]] = {}
    for step, t in steps.items():
        cp = by_step.get(step)
        out[t] = (cp.rel_q, cp.rel_y) if cp is not None else (None, None)
    return out


def _sweep_worker(config: RunConfig) -> dict:
    try:
        result = run_simulation(config)
    except Exception as err:  # recorded per row; the sweep continues
        return {
            "n": config.n,
            "seed": config.seed,
            "status": "error",
            "error": f"{type(err).__name__}: {err}",
        }
    summary = result.summary
    row: dict = {
        "n": summary.n,
        "seed": summary.seed,
        "status": "ok",
        "error": "",
        "final_step": summary.final_step,
        "saturated": summary.saturated,
        "final_edges": summary.final_edge_count,
    }
    if summary.saturated:
        row["c_n"] = summary.final_edge_count / (
            summary.n**1.5 * math.sqrt(math.log(summary.n))
        )
    residuals = _gridpoint_residuals(result.checkpoints, summary.n)
    for t, (rel_q, rel_y) in residuals.items():
        row[f"rel_q_t{t:g}"] = rel_q
        row[f"rel_y_t{t:g}"] = rel_y
    return row


def sweep(
    n_values: list[int],
    seeds_per_n: int,
    template: RunConfig,
    jobs: int = 1,
) -> tuple[list[dict], list[dict]]:
    """Run every (n, seed slot) combination; never aborts on per-run errors.

    Per-run seeds are template.seed + run_index, in grid order, so the
    row set is identical however many workers execute it.  Returns the
    per-run rows and the per-n aggregate rows.
    """
    if not n_values or seeds_per_n < 1:
        raise ValueError("need at least one n and one seed per n")
    configs = []
    for ni, n in enumerate(n_values):
        for s in range(seeds_per_n):
            index = ni * seeds_per_n + s
            configs.append(replace(template, n=n, seed=template.seed + index))
    if jobs > 1:
        with Pool(processes=jobs) as pool:
            rows = pool.map(_sweep_worker, configs)
    else:
        rows = [_sweep_worker(config) for config in configs]

    aggregates: list[dict] = []
    for n in n_values:
        ok_rows = [r for r in rows if r["n"] == n and r["status"] == "ok"]
        entry: dict = {"n": n, "runs": seeds_per_n, "ok": len(ok_rows)}
        c_values = [r["c_n"] for r in ok_rows if r.get("c_n") is not None]
        if c_values:
            entry["c_mean"] = fmean(c_values)
            entry["c_std"] = pstdev(c_values)
        for t in SWEEP_GRID:
            for kind in ("rel_q", "rel_y"):
                values = [
                    r[f"{kind}_t{t:g}"]
                    for r in ok_rows
                    if r.get(f"{kind}_t{t:g}") is not None
                ]
                if values:
                    entry[f"{kind}_t{t:g}_mean"] = fmean(values)
                    entry[f"{kind}_t{t:g}_std"] = pstdev(values)
        aggregates.append(entry)
    return rows, aggregates


def write_sweep_files(
    rows: list[dict], aggregates: list[dict], out_dir: Path
) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "sweep.csv"
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(SWEEP_COLUMNS)
        for row in rows:
            writer.writerow(
                [_csv_field(row.get(column)) for column in SWEEP_COLUMNS]
            )
    with open(out_dir / "sweep_summary.json", "w", encoding="utf-8") as fh:
        json.dump(
            {"schema_version": SCHEMA_VERSION, "aggregates": aggregates},
            fh,
            indent=2,
            sort_keys=True,
        )
        fh.write("\n")
    return csv_path


def _csv_field(value: object) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


# ----------------------------------------------------------------------
# audits

@dataclass(frozen=True)
class AuditOutcome:
    """Aggregate of periodic full-state audits and the optional oracle check."""

    audits: int
    failures: tuple[tuple[int, AuditReport], ...]  # (step, failing report)
    tv_distance: float | None
    tv_threshold: float

    @property
    def ok(self) -> bool:
        if self.failures:
            return False
        if self.tv_distance is not None and self.tv_distance > self.tv_threshold:
            return False
        return True


def audit_run(
    config: RunConfig,
    *,
    oracle: bool = False,
    trials: int = 100_000,
    tv_threshold: float = 0.02,
    corruptor=None,
) -> AuditOutcome:
    """Run with a full ground-truth audit at every checkpoint step.

    With `oracle=True` (n <= 5 only) additionally compares final-graph
    distributions between the engine and the permutation ordering
    reference over `trials` runs each.  `corruptor(state)`, if given, is
    invoked after the first step; it exists so tests can verify that a
    poisoned state is actually caught.
    """
    config.validate()
    if oracle and config.n > 5:
        raise ValueError("the permutation-ordering comparison is exhaustive-scale; n must be <= 5")
    params = TrajectoryParams(config.n)
    horizon = params.horizon
    cadence = config.checkpoint_every or default_cadence(horizon)
    state = ProcessState(config.n, config.seed, record_frozen_y=config.record_frozen_y)
    failures: list[tuple[int, AuditReport]] = []
    audits = 0

    def hook(st: ProcessState, result: StepResult) -> None:
        nonlocal audits
        if corruptor is not None and st.steps == 1:
            corruptor(st)
        if st.steps % cadence == 0:
            report = st.audit(st.total_pairs)
            audits += 1
            if not report.ok:
                failures.append((st.steps, report))

    state.run(_resolve_stop(config.stop, horizon), on_step=hook)
    final_report = state.audit(state.total_pairs)
    audits += 1
    if not final_report.ok:
        failures.append((state.steps, final_report))

    tv = None
    if oracle:
        tv = equivalence_tv(config.n, trials)
    return AuditOutcome(
        audits=audits,
        failures=tuple(failures),
        tv_distance=tv,
        tv_threshold=tv_threshold,
    )
