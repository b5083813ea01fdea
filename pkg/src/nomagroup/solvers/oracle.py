"""Exhaustive checks for small instances: stability certificate and global optimum."""

from __future__ import annotations

import itertools
import math
from typing import Iterator

import numpy as np

from ..errors import CapabilityError
from ..graph import ExtendedGrouping, apply_cycle, build_graph, cycle_weight, extend_with_virtuals
from ..power import Grouping, group_power, total_power
from ..scenario import Scenario

MAX_CYCLES = 2_000_000
MAX_ASSIGNMENTS = 10_000_000


def count_cycles(eg: ExtendedGrouping) -> int:
    """Number of directed differ-group cycles (up to rotation) on the extended node set."""
    sizes = np.bincount(eg.pi, minlength=eg.group_count)
    total = 0
    for k in range(2, eg.group_count + 1):
        for groups in itertools.combinations(range(eg.group_count), k):
            total += math.prod(int(sizes[g]) for g in groups) * math.factorial(k - 1)
    return total


def enumerate_cycles(eg: ExtendedGrouping, max_cycles: int = MAX_CYCLES) -> Iterator[tuple[int, ...]]:
    """Every differ-group cycle of length 2..G, each rotation class once.

    The member from the lowest-numbered group of the cycle is listed first.
    """
    n = count_cycles(eg)
    if n > max_cycles:
        raise CapabilityError(f"{n} cycles exceed the enumeration cap of {max_cycles}")
    by_group = [[] for _ in range(eg.group_count)]
    for node, g in enumerate(eg.pi):
        by_group[g].append(node)
    for k in range(2, eg.group_count + 1):
        for groups in itertools.combinations(range(eg.group_count), k):
            for pick in itertools.product(*(by_group[g] for g in groups)):
                head, rest = pick[0], pick[1:]
                for perm in itertools.permutations(rest):
                    yield (head,) + perm


def cycle_power_change(users, eg: ExtendedGrouping, s: Scenario) -> tuple[float, float]:
    """Total power before and after applying a cycle, recomputed from scratch."""
    before = total_power(eg.base, s)
    after = total_power(apply_cycle(users, eg).base, s)
    return before, after


def is_all_stable(
    g: Grouping,
    s: Scenario,
    threshold: float | None = None,
    method: str = "direct",
    max_cycles: int = MAX_CYCLES,
) -> bool:
    """True iff no differ-group cycle lowers total power by more than ``threshold``.

    ``method="direct"`` applies every cycle and recomputes total power, which
    does not rely on the graph at all; ``method="graph"`` sums edge weights.
    The default threshold matches the solver's: 1e-9 * max(1 W, P_t).
    """
    eg = extend_with_virtuals(g, s)
    base = total_power(g, s)
    if threshold is None:
        threshold = 1e-9 * max(1.0, base)
    if method == "graph":
        graph = build_graph(eg, s)
        return all(cycle_weight(c, graph) >= -threshold for c in enumerate_cycles(eg, max_cycles))
    if method != "direct":
        raise ValueError(f"unknown method {method!r}")
    for c in enumerate_cycles(eg, max_cycles):
        after = total_power(apply_cycle(c, eg).base, s)
        if after - base < -threshold:
            return False
    return True


def brute_force_optimum(s: Scenario, max_assignments: int = MAX_ASSIGNMENTS) -> tuple[Grouping, float]:
    """Minimum total power over all G**N labeled assignments.

    Group totals are memoized per member set; ties keep the assignment that
    comes first in lexicographic order.
    """
    N, G = s.n_users, s.group_count
    if G**N > max_assignments:
        raise CapabilityError(f"{G}^{N} assignments exceed the cap of {max_assignments}")
    cache: dict[int, float] = {0: 0.0}

    def cost(mask: int) -> float:
        v = cache.get(mask)
        if v is None:
            v = group_power([n for n in range(N) if mask >> n & 1], s)
            cache[mask] = v
        return v

    best, best_a = math.inf, None
    for a in itertools.product(range(G), repeat=N):
        masks = [0] * G
        for n, gn in enumerate(a):
            masks[gn] |= 1 << n
        p = sum(cost(m) for m in masks)
        if p < best:
            best, best_a = p, a
    grouping = Grouping(best_a, G)
    return grouping, total_power(grouping, s)
