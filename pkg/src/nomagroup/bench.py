"""Benchmark harness: single runs, parameter sweeps, CSV and aggregate output."""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from .errors import CapabilityError, ConfigurationError
from .power import achieved_rates, allocate_all
from .scenario import ChannelModelParams, Scenario, generate_scenario
from .solvers import (
    SolverConfig,
    baseline_gale_shapley,
    baseline_user_preference,
    brute_force_optimum,
    solve,
)

log = logging.getLogger(__name__)

STRATEGIES = ("bellman_ford", "greedy", "user_preference", "gale_shapley", "brute_force")
SWEEPS = ("groups", "users", "alpha", "iterations")
RATE_CHECK_TOL = 1e-9


@dataclass
class ResultRow:
    strategy: str
    seed: int
    n_users: int
    group_count: int
    alpha: float
    total_power_w: float
    total_power_dbm: float
    iterations: int
    loops_applied: int
    wall_time_s: float
    stable: bool | str  # "error:<Type>: <message>" on failed cells

    @property
    def is_error(self) -> bool:
        return isinstance(self.stable, str)


CSV_HEADER = tuple(f.name for f in fields(ResultRow))


def watts_to_dbm(p: float) -> float:
    return 10.0 * math.log10(p * 1000.0) if p > 0 else -math.inf


@dataclass
class ExperimentConfig:
    """One sweep: ``values`` of the swept quantity times ``seeds`` times ``strategies``.

    The population rule: ``n_users`` and ``group_count`` fix N and G when
    given; otherwise ``users_per_group`` sets N = users_per_group * G (the
    default, 2, gives N = 2G).
    """

    sweep: str
    values: list
    seeds: list[int]
    strategies: list[str]
    n_users: int | None = None
    group_count: int | None = None
    users_per_group: float = 2.0
    alpha: float = 5.0
    output_path: str | None = None
    exact_mode_group_cap: int = 12
    params: ChannelModelParams = field(default_factory=ChannelModelParams)

    def __post_init__(self):
        if self.sweep not in SWEEPS:
            raise ConfigurationError(f"sweep must be one of {SWEEPS}, got {self.sweep!r}")
        for name in ("values", "seeds", "strategies"):
            if not getattr(self, name):
                raise ConfigurationError(f"{name} must be nonempty")
        bad = [s for s in self.strategies if s not in STRATEGIES]
        if bad:
            raise ConfigurationError(f"unknown strategies {bad}; choose from {STRATEGIES}")
        if self.sweep == "users" and self.group_count is None:
            raise ConfigurationError("a users sweep needs a fixed group_count")
        if self.sweep in ("alpha", "iterations") and self.group_count is None:
            raise ConfigurationError(f"a {self.sweep} sweep needs a fixed group_count")
        if isinstance(self.params, dict):
            self.params = ChannelModelParams(**self.params)

    def cell(self, value) -> tuple[int, int, float]:
        """(N, G, alpha) for one swept value."""
        alpha = self.alpha
        if self.sweep == "groups":
            G = int(value)
        else:
            G = int(self.group_count)
        if self.sweep == "users":
            N = int(value)
        elif self.n_users is not None:
            N = int(self.n_users)
        else:
            N = int(round(self.users_per_group * G))
        if self.sweep == "alpha":
            alpha = float(value)
        return N, G, alpha

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        raw = json.loads(text)
        if not isinstance(raw, dict):
            raise ConfigurationError("experiment config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**raw)
        except TypeError as exc:
            raise ConfigurationError(str(exc)) from exc


def _check_rates(grouping, allocation, s: Scenario) -> None:
    got = achieved_rates(grouping, allocation, s)
    err = np.abs(got - s.rates) / s.rates
    if err.size and err.max() > RATE_CHECK_TOL:
        raise AssertionError(f"rate check failed: max relative error {err.max():.3g}")


def run_single(s: Scenario, strategy: str, cfg: SolverConfig | None = None) -> ResultRow:
    """Run one strategy on one scenario; the allocation's rates are verified."""
    return run_strategy(s, strategy, cfg)[0]


def run_strategy(s: Scenario, strategy: str, cfg: SolverConfig | None = None):
    """Like :func:`run_single` but also returns the grouping (row, grouping)."""
    if strategy not in STRATEGIES:
        raise ConfigurationError(f"unknown strategy {strategy!r}")
    try:
        return _run(s, strategy, cfg or SolverConfig())
    except (ConfigurationError, CapabilityError) as exc:
        raise type(exc)(f"{strategy}: {exc}") from exc


def _run(s, strategy, cfg):
    t0 = time.perf_counter()
    iterations, loops, stable = 0, 0, True
    if strategy in ("bellman_ford", "greedy"):
        report = solve(s, replace(cfg, loop_finder=strategy))
        grouping, allocation = report.final_grouping, report.allocation
        iterations, loops, stable = report.iterations, report.loops_applied, report.stable
    elif strategy == "user_preference":
        grouping, allocation = baseline_user_preference(s)
    elif strategy == "gale_shapley":
        grouping, allocation = baseline_gale_shapley(s)
    else:
        grouping, _ = brute_force_optimum(s)
        allocation = allocate_all(grouping, s)
    elapsed = time.perf_counter() - t0
    _check_rates(grouping, allocation, s)
    row = ResultRow(
        strategy=strategy,
        seed=int(s.seed),
        n_users=s.n_users,
        group_count=s.group_count,
        alpha=float(cfg.alpha),
        total_power_w=allocation.total,
        total_power_dbm=watts_to_dbm(allocation.total),
        iterations=iterations,
        loops_applied=loops,
        wall_time_s=elapsed,
        stable=stable,
    )
    return row, grouping


def _error_row(strategy, seed, N, G, alpha, exc) -> ResultRow:
    msg = str(exc).replace("\n", " ")
    return ResultRow(strategy, seed, N, G, alpha, math.nan, math.nan, 0, 0, 0.0,
                     f"error:{type(exc).__name__}: {msg}")


def _iteration_rows(s, strategy, cfg, caps) -> list[ResultRow]:
    """Power after at most ``k`` applied loops, for each ``k`` in ``caps``, from one run."""
    if strategy not in ("bellman_ford", "greedy"):
        row = run_single(s, strategy, cfg)
        return [replace(row, iterations=int(k)) for k in caps]
    t0 = time.perf_counter()
    report = solve(s, replace(cfg, loop_finder=strategy))
    elapsed = time.perf_counter() - t0
    _check_rates(report.final_grouping, report.allocation, s)
    traj = report.power_trajectory
    rows = []
    for k in caps:
        k = int(k)
        done = min(k, len(traj) - 1)
        p = traj[done]
        rows.append(ResultRow(strategy, int(s.seed), s.n_users, s.group_count, float(cfg.alpha),
                              p, watts_to_dbm(p), k, done, elapsed,
                              report.stable and done == len(traj) - 1))
    return rows


def run_sweep(
    cfg: ExperimentConfig,
    on_row: Callable[[ResultRow], None] | None = None,
) -> list[ResultRow]:
    """Run every (value, seed, strategy) cell; failing cells become error rows.

    Rows are written to ``cfg.output_path`` as they complete when it is set,
    so an interrupted sweep leaves a valid CSV behind.
    """
    writer = _CsvAppender(cfg.output_path) if cfg.output_path else None
    rows: list[ResultRow] = []

    def emit(row):
        rows.append(row)
        if writer:
            writer.write(row)
        if on_row:
            on_row(row)

    try:
        values = cfg.values if cfg.sweep != "iterations" else [None]
        for value in values:
            N, G, alpha = cfg.cell(value)
            solver_cfg = SolverConfig(alpha=alpha, exact_mode_group_cap=cfg.exact_mode_group_cap)
            for seed in cfg.seeds:
                s = generate_scenario(N, G, int(seed), cfg.params)
                for strategy in cfg.strategies:
                    try:
                        if cfg.sweep == "iterations":
                            for row in _iteration_rows(s, strategy, solver_cfg, cfg.values):
                                emit(row)
                        else:
                            emit(run_single(s, strategy, solver_cfg))
                    except Exception as exc:  # one bad cell must not end the sweep
                        log.warning("cell %s seed=%s N=%d G=%d failed: %s", strategy, seed, N, G, exc)
                        emit(_error_row(strategy, int(seed), N, G, alpha, exc))
    finally:
        if writer:
            writer.close()
    return rows


# ---------------------------------------------------------------------------
# output

def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


class _CsvAppender:
    def __init__(self, path):
        self._fh = open(path, "w", newline="")
        self._w = csv.writer(self._fh)
        self._w.writerow(CSV_HEADER)
        self._fh.flush()

    def write(self, row: ResultRow):
        self._w.writerow([_fmt(v) for v in asdict(row).values()])
        self._fh.flush()

    def close(self):
        self._fh.close()


def emit_csv(rows: Iterable[ResultRow], path) -> None:
    rows = list(rows)
    if not rows:
        raise ValueError("no rows to write")
    out = _CsvAppender(path)
    try:
        for r in rows:
            out.write(r)
    finally:
        out.close()


def _parse_stable(v: str):
    if v == "true":
        return True
    if v == "false":
        return False
    return v


def read_csv(path) -> list[ResultRow]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != CSV_HEADER:
            raise ValueError(f"unexpected header {header}")
        rows = []
        for rec in reader:
            d = dict(zip(header, rec))
            rows.append(ResultRow(
                strategy=d["strategy"], seed=int(d["seed"]), n_users=int(d["n_users"]),
                group_count=int(d["group_count"]), alpha=float(d["alpha"]),
                total_power_w=float(d["total_power_w"]), total_power_dbm=float(d["total_power_dbm"]),
                iterations=int(d["iterations"]), loops_applied=int(d["loops_applied"]),
                wall_time_s=float(d["wall_time_s"]), stable=_parse_stable(d["stable"]),
            ))
        return rows


PLOT_HEADER_TAIL = ("count", "mean_power_w", "std_power_w", "mean_power_dbm", "std_power_dbm")


def aggregate(rows: Iterable[ResultRow], group_by: str) -> list[dict]:
    """Mean and population std of total power per (strategy, ``group_by`` value)."""
    if group_by not in CSV_HEADER:
        raise ValueError(f"cannot group by {group_by!r}")
    buckets: dict[tuple, list[ResultRow]] = {}
    for r in rows:
        if r.is_error:
            continue
        buckets.setdefault((r.strategy, getattr(r, group_by)), []).append(r)
    out = []
    for (strategy, x), rs in sorted(buckets.items(), key=lambda kv: (kv[0][0], kv[0][1])):
        w = np.array([r.total_power_w for r in rs])
        dbm = np.array([r.total_power_dbm for r in rs])
        out.append({
            "strategy": strategy, group_by: x, "count": len(rs),
            "mean_power_w": float(w.mean()), "std_power_w": float(w.std()),
            "mean_power_dbm": float(dbm.mean()), "std_power_dbm": float(dbm.std()),
        })
    return out


def emit_plot_data(rows: Iterable[ResultRow], group_by: str, path) -> None:
    agg = aggregate(rows, group_by)
    if not agg:
        raise ValueError("no successful rows to aggregate")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("strategy", group_by) + PLOT_HEADER_TAIL)
        for rec in agg:
            w.writerow([_fmt(rec[k]) for k in ("strategy", group_by) + PLOT_HEADER_TAIL])


def write_solution(path, strategy: str, s: Scenario, grouping, total: float) -> None:
    from .scenario import dumps_scenario

    doc = {
        "schema_version": 1,
        "strategy": strategy,
        "total_power_w": total,
        "assignment": {str(u.id): int(g) for u, g in zip(s.users, grouping.assignment)},
        "scenario": json.loads(dumps_scenario(s)),
    }
    Path(path).write_text(json.dumps(doc, indent=2))


def read_solution(path):
    from .errors import ScenarioFormatError
    from .power import Grouping
    from .scenario import loads_scenario

    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioFormatError(f"invalid JSON: {exc.msg}", line=exc.lineno) from exc
    for key in ("scenario", "assignment"):
        if key not in doc:
            raise ScenarioFormatError("missing required field in solution", field=key)
    s = loads_scenario(json.dumps(doc["scenario"]))
    try:
        assignment = tuple(int(doc["assignment"][str(u.id)]) for u in s.users)
    except KeyError as exc:
        raise ScenarioFormatError(f"no group for user {exc.args[0]}", field="assignment") from exc
    return s, Grouping(assignment, s.group_count), doc
