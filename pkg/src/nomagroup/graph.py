"""Move-delta digraph over real and virtual users, and loop application.

Node ``n < N`` is real user ``n``; node ``N + g`` is the zero-rate virtual
user of group ``g``. The edge ``i -> j`` exists when ``i`` and ``j`` are in
different groups and weighs the change of ``i``'s PCE when ``i`` takes ``j``'s
place: ``i`` joins ``j``'s group while ``j`` leaves it. Along a cycle of users
in pairwise distinct groups every group loses one member and gains one, so the
cycle's weight is exactly the change in total power when all moves are made.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ContractViolation
from .power import Grouping, _insertion_terms, pce, sic_order
from .scenario import Scenario

# Marks a missing edge (same group or diagonal). Never summed: finders mask
# with ``GroupingGraph.present`` and cycle_weight refuses absent edges.
ABSENT = np.inf


@dataclass(frozen=True)
class ExtendedGrouping:
    """A grouping of real users plus one virtual user pinned to each group."""

    base: Grouping

    @property
    def n_real(self) -> int:
        return self.base.n_users

    @property
    def group_count(self) -> int:
        return self.base.group_count

    @property
    def n_nodes(self) -> int:
        return self.n_real + self.group_count

    @property
    def pi(self) -> np.ndarray:
        return np.concatenate((self.base.as_array(), np.arange(self.group_count)))

    def is_virtual(self, n: int) -> bool:
        return n >= self.n_real

    def virtual_of(self, g: int) -> int:
        return self.n_real + g

    def group_of(self, n: int) -> int:
        if n >= self.n_real:
            return n - self.n_real
        return self.base.assignment[n]


@dataclass(frozen=True)
class GroupingGraph:
    weights: np.ndarray  # (V, V) watts, ABSENT on same-group pairs
    pi: np.ndarray  # group of each node
    n_real: int

    @property
    def n_nodes(self) -> int:
        return len(self.pi)

    @property
    def group_count(self) -> int:
        return int(self.pi.max()) + 1 if len(self.pi) else 0

    @property
    def present(self) -> np.ndarray:
        return self.pi[:, None] != self.pi[None, :]

    def weight(self, i: int, j: int) -> float:
        if self.pi[i] == self.pi[j]:
            raise ContractViolation(f"no edge {i} -> {j}: same group {self.pi[i]}")
        return float(self.weights[i, j])

    def to_csv(self, path) -> None:
        """Dump the adjacency matrix; absent edges are empty cells."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([""] + [str(j) for j in range(self.n_nodes)])
            present = self.present
            for i in range(self.n_nodes):
                w.writerow([str(i)] + [
                    format(self.weights[i, j], ".17g") if present[i, j] else ""
                    for j in range(self.n_nodes)
                ])


@dataclass(frozen=True)
class DifferGroupLoop:
    users: tuple[int, ...]
    weight: float

    def __len__(self):
        return len(self.users)


def extend_with_virtuals(g: Grouping, s: Scenario) -> ExtendedGrouping:
    g.check_against(s)
    return ExtendedGrouping(g)


def move_delta(i: int, j: int, eg: ExtendedGrouping, s: Scenario) -> float:
    """PCE change of ``i`` when it moves into ``j``'s group and ``j`` leaves it."""
    gi, gj = eg.group_of(i), eg.group_of(j)
    if gi == gj:
        raise ContractViolation(f"users {i} and {j} are both in group {gi}")
    if eg.is_virtual(i):
        return 0.0
    exclude = () if eg.is_virtual(j) else (j,)
    return pce(i, gj, eg.base, s, exclude=exclude) - pce(i, gi, eg.base, s)


def build_graph(eg: ExtendedGrouping, s: Scenario) -> GroupingGraph:
    """Dense adjacency of move deltas, vectorized per (group, leaving member)."""
    eg.base.check_against(s)
    n_real, n_groups = eg.n_real, eg.group_count
    pi = eg.pi
    rank = s.sic_rank
    cost = np.exp2(s.rates) - 1.0
    inv = s.noise_power / s.gains

    raw = np.full((eg.n_nodes, eg.n_nodes), ABSENT)
    current = np.zeros(n_real)
    base_pi = eg.base.as_array()
    real = np.arange(n_real)
    for g in range(n_groups):
        order = sic_order(eg.base.members(g), s)
        outsiders = real[base_pi != g]
        c_out, inv_out = cost[outsiders], inv[outsiders]
        k_out = np.searchsorted(rank[order], rank[outsiders])

        up, down = _insertion_terms(order, s)
        raw[outsiders, n_real + g] = (c_out * (up[k_out] + inv_out)) * np.exp2(down[k_out])

        for idx, j in enumerate(order):
            reduced = order[:idx] + order[idx + 1 :]
            up, down = _insertion_terms(reduced, s)
            current[j] = (cost[j] * (up[idx] + inv[j])) * np.exp2(down[idx])
            k = k_out - (k_out > idx)
            raw[outsiders, j] = (c_out * (up[k] + inv_out)) * np.exp2(down[k])

    weights = raw
    weights[:n_real] -= current[:, None]
    present = pi[:, None] != pi[None, :]
    weights[n_real:][present[n_real:]] = 0.0
    weights[~present] = ABSENT
    return GroupingGraph(weights=weights, pi=pi, n_real=n_real)


def _check_loop(users: Sequence[int], pi: np.ndarray) -> None:
    if len(users) < 2:
        raise ContractViolation("a loop needs at least two users")
    groups = [int(pi[u]) for u in users]
    if len(set(groups)) != len(groups):
        raise ContractViolation(f"loop users not in pairwise distinct groups: {groups}")


def cycle_weight(users: Sequence[int], graph: GroupingGraph) -> float:
    """Sum of edge weights around ``users`` including the closing edge."""
    _check_loop(users, graph.pi)
    total = 0.0
    for a, b in zip(users, list(users[1:]) + [users[0]]):
        total += graph.weight(a, b)
    return total


def loop_moves(users: Sequence[int], eg: ExtendedGrouping) -> dict[int, int]:
    """Real-user moves a loop makes, each against the pre-move assignment."""
    _check_loop(users, eg.pi)
    nxt = list(users[1:]) + [users[0]]
    return {a: eg.group_of(b) for a, b in zip(users, nxt) if not eg.is_virtual(a)}


def apply_cycle(loop, eg: ExtendedGrouping) -> ExtendedGrouping:
    """Move every loop member into its successor's group simultaneously.

    Virtual users are placeholders and stay put, so a loop through a virtual
    user shifts members between groups rather than exchanging them.
    """
    users = loop.users if isinstance(loop, DifferGroupLoop) else tuple(loop)
    return ExtendedGrouping(eg.base.with_moves(loop_moves(users, eg)))
