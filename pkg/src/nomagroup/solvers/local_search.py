"""Cycle-canceling local search over the move-delta graph."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

from ..errors import ConfigurationError
from ..graph import apply_cycle, build_graph, extend_with_virtuals
from ..power import Grouping, PowerAllocation, allocate_all, pce_among, total_power
from ..scenario import Scenario
from .loops import DEFAULT_MAX_LABELS, find_loop_bellman_ford, find_loop_greedy

log = logging.getLogger(__name__)

LOOP_FINDERS = ("bellman_ford", "greedy")


@dataclass(frozen=True)
class SolverConfig:
    loop_finder: str = "greedy"
    alpha: float = 5.0
    # None means 1e-9 * max(1 W, current total power)
    neg_threshold: float | None = None
    max_outer_iters: int = 100_000
    exact_mode_group_cap: int = 12
    max_labels: int = DEFAULT_MAX_LABELS

    def __post_init__(self):
        if self.loop_finder not in LOOP_FINDERS:
            raise ConfigurationError(
                f"loop_finder must be one of {LOOP_FINDERS}, got {self.loop_finder!r}"
            )
        if not self.alpha > 0:
            raise ConfigurationError(f"alpha must be positive, got {self.alpha}")
        if self.neg_threshold is not None and self.neg_threshold < 0:
            raise ConfigurationError("neg_threshold must be >= 0")
        if self.max_outer_iters < 0:
            raise ConfigurationError("max_outer_iters must be >= 0")

    def threshold(self, current_power: float) -> float:
        if self.neg_threshold is not None:
            return self.neg_threshold
        return 1e-9 * max(1.0, current_power)


@dataclass
class SolveReport:
    final_grouping: Grouping
    allocation: PowerAllocation
    power_trajectory: list[float]
    loops_applied: int
    wall_time: float
    stable: bool
    diagnostic: str = ""
    loop_lengths: list[int] = field(default_factory=list)

    @property
    def total_power(self) -> float:
        return self.allocation.total

    @property
    def iterations(self) -> int:
        """Graph builds performed (one per outer iteration)."""
        return self.loops_applied + (1 if self.stable else 0)


def init_grouping(s: Scenario) -> Grouping:
    """Place users one by one, strongest channel first, where their PCE is lowest.

    Each user decodes last in every group it could join at that point, so
    its PCE there is just its own power. Ties go to the lowest group index,
    which puts users alone while empty groups remain.
    """
    assignment = [0] * s.n_users
    groups: list[list[int]] = [[] for _ in range(s.group_count)]
    for n in sorted(range(s.n_users), key=lambda n: s.sic_rank[n]):
        costs = [pce_among(n, members, s) for members in groups]
        best = costs.index(min(costs))
        groups[best].append(n)
        assignment[n] = best
    return Grouping(tuple(assignment), s.group_count)


def solve(
    s: Scenario,
    cfg: SolverConfig | None = None,
    initial: Grouping | None = None,
) -> SolveReport:
    """Apply negative differ-group loops until none is found.

    One loop is applied per outer iteration and the graph is rebuilt after
    every move. With the greedy finder, the first user of each applied loop
    may not start another loop in this run, which bounds the number of
    applied loops by N + G.
    """
    cfg = cfg or SolverConfig()
    t0 = time.perf_counter()
    g = initial if initial is not None else init_grouping(s)
    eg = extend_with_virtuals(g, s)
    if cfg.loop_finder == "greedy" and cfg.alpha * eg.n_nodes < 1 - 1e-12:
        raise ConfigurationError(
            f"alpha={cfg.alpha} gives no restarts for {eg.n_nodes} nodes "
            f"(need alpha >= 1/{eg.n_nodes})"
        )
    power = total_power(g, s)
    trajectory = [power]
    lengths = []
    forbidden: set[int] = set()
    stable = False
    diagnostic = ""

    for _ in range(cfg.max_outer_iters):
        graph = build_graph(eg, s)
        eps = cfg.threshold(power)
        if cfg.loop_finder == "bellman_ford":
            loop = find_loop_bellman_ford(
                graph, eg, threshold=eps,
                group_cap=cfg.exact_mode_group_cap, max_labels=cfg.max_labels,
            )
        else:
            loop = find_loop_greedy(graph, eg, alpha=cfg.alpha,
                                    forbidden_starts=forbidden, threshold=eps)
        if loop is None:
            stable = True
            break
        nxt = apply_cycle(loop, eg)
        new_power = total_power(nxt.base, s)
        if not new_power < power - eps:
            # rounding disagreement between edge weights and the recomputed total
            diagnostic = (
                f"loop {loop.users} of weight {loop.weight:.6g} W changed total "
                f"power by {new_power - power:.6g} W; stopping"
            )
            log.warning(diagnostic)
            break
        eg, power = nxt, new_power
        trajectory.append(power)
        lengths.append(len(loop.users))
        forbidden.add(loop.users[0])
    else:
        diagnostic = f"iteration cap {cfg.max_outer_iters} reached"
        log.warning(diagnostic)

    return SolveReport(
        final_grouping=eg.base,
        allocation=allocate_all(eg.base, s),
        power_trajectory=trajectory,
        loops_applied=len(trajectory) - 1,
        wall_time=time.perf_counter() - t0,
        stable=stable,
        diagnostic=diagnostic,
        loop_lengths=lengths,
    )
