"""Minimum-power allocation under SIC, rates, externalities and PCE.

Within a group, users are decoded in SIC order: descending channel gain, ties
broken by ascending user id. A user sees interference only from members that
come earlier in that order. The minimal powers meeting every target rate with
equality are obtained by one forward pass from the strongest user,

    p_k = (2**r_k - 1) * (noise / h_k + sum(p_j for j before k)).

The PCE ("power consumption and externality") of a user is the power it adds
to a group it joins: its own power plus what the later-decoded members must
add to overcome it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ConsistencyError, ContractViolation, DomainError
from .scenario import Scenario, UserProfile

REL_TOL = 1e-9
ABS_TOL = 1e-21  # W


def powers_close(a, b, rel=REL_TOL, abs_=ABS_TOL, scale=None):
    """Power comparison used throughout: relative tolerance with an absolute floor.

    ``scale`` overrides the magnitude the relative tolerance applies to; use
    it when ``a`` and ``b`` are differences of much larger totals.
    """
    if scale is None:
        scale = max(abs(a), abs(b))
    return abs(a - b) <= rel * scale + abs_


@dataclass(frozen=True)
class Grouping:
    """Assignment of every user (by position in ``Scenario.users``) to a group.

    Groups are numbered ``0 .. group_count - 1``.
    """

    assignment: tuple[int, ...]
    group_count: int

    def __post_init__(self):
        a = tuple(int(x) for x in self.assignment)
        object.__setattr__(self, "assignment", a)
        if self.group_count < 1:
            raise DomainError("group_count must be >= 1")
        bad = [g for g in a if not 0 <= g < self.group_count]
        if bad:
            raise DomainError(f"group index out of range [0, {self.group_count}): {bad[0]}")

    @classmethod
    def from_groups(cls, groups: Sequence[Iterable[int]], n_users: int | None = None):
        assignment = {}
        for g, members in enumerate(groups):
            for n in members:
                if n in assignment:
                    raise ContractViolation(f"user {n} appears in two groups")
                assignment[n] = g
        if n_users is None:
            n_users = len(assignment)
        if sorted(assignment) != list(range(n_users)):
            raise ContractViolation("groups must partition users 0..N-1")
        return cls(tuple(assignment[n] for n in range(n_users)), len(groups))

    @classmethod
    def singletons(cls, n_users: int, group_count: int):
        if group_count < n_users:
            raise DomainError("need at least as many groups as users")
        return cls(tuple(range(n_users)), group_count)

    @property
    def n_users(self) -> int:
        return len(self.assignment)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.assignment, dtype=np.int64)

    def members(self, g: int) -> list[int]:
        return [n for n, gn in enumerate(self.assignment) if gn == g]

    def groups(self) -> list[list[int]]:
        out = [[] for _ in range(self.group_count)]
        for n, g in enumerate(self.assignment):
            out[g].append(n)
        return out

    def group_sizes(self) -> np.ndarray:
        return np.bincount(self.as_array(), minlength=self.group_count)

    def with_moves(self, moves: dict[int, int]) -> "Grouping":
        a = list(self.assignment)
        for n, g in moves.items():
            a[n] = g
        return Grouping(tuple(a), self.group_count)

    def check_against(self, s: Scenario) -> None:
        if self.n_users != s.n_users:
            raise ConsistencyError(
                f"grouping covers {self.n_users} users, scenario has {s.n_users}"
            )
        if self.group_count != s.group_count:
            raise ConsistencyError(
                f"grouping has {self.group_count} groups, scenario has {s.group_count}"
            )


@dataclass(frozen=True)
class PowerAllocation:
    power: np.ndarray  # W, per user position
    per_group_total: np.ndarray  # W, per group
    total: float  # W


def sic_order(members: Iterable[int], s: Scenario) -> list[int]:
    """Sort user positions into SIC decoding order."""
    rank = s.sic_rank
    return sorted(members, key=lambda n: rank[n])


def forward_powers(gains: np.ndarray, rates: np.ndarray, noise: float) -> np.ndarray:
    """Forward pass over users already in SIC order; no validation."""
    cost = np.exp2(rates) - 1.0
    out = np.empty(len(gains))
    acc = 0.0
    for k in range(len(gains)):
        p = 0.0 if rates[k] == 0 else cost[k] * (noise / gains[k] + acc)
        out[k] = p
        acc += p
    return out


def allocate_group_power(members: Sequence[UserProfile], noise_power: float) -> np.ndarray:
    """Minimal powers for ``members`` given in SIC order, aligned with the input."""
    for k, u in enumerate(members):
        if not u.channel_gain_sq > 0:
            raise DomainError(f"user {u.id}: channel gain must be positive")
        if k:
            prev = members[k - 1]
            if (prev.channel_gain_sq, -prev.id) < (u.channel_gain_sq, -u.id):
                raise ContractViolation(
                    f"members not in SIC order at position {k} "
                    f"(user {prev.id} before user {u.id})"
                )
    gains = np.array([u.channel_gain_sq for u in members], dtype=float)
    rates = np.array([u.target_rate for u in members], dtype=float)
    return forward_powers(gains, rates, noise_power)


def group_powers(members: Iterable[int], s: Scenario) -> tuple[list[int], np.ndarray]:
    """SIC-sorted member positions and their minimal powers."""
    order = sic_order(members, s)
    idx = np.asarray(order, dtype=np.int64)
    return order, forward_powers(s.gains[idx], s.rates[idx], s.noise_power)


def group_power(members: Iterable[int], s: Scenario) -> float:
    return float(np.sum(group_powers(members, s)[1]))


def allocate_all(g: Grouping, s: Scenario) -> PowerAllocation:
    g.check_against(s)
    power = np.zeros(s.n_users)
    totals = np.zeros(g.group_count)
    for k, members in enumerate(g.groups()):
        if not members:
            continue
        order, p = group_powers(members, s)
        power[order] = p
        totals[k] = p.sum()
    return PowerAllocation(power=power, per_group_total=totals, total=float(totals.sum()))


def total_power(g: Grouping, s: Scenario) -> float:
    return allocate_all(g, s).total


def achievable_rate(n: int, g: Grouping, a: PowerAllocation, s: Scenario) -> float:
    """Shannon rate of user ``n`` treating earlier-decoded group members as interference."""
    rank = s.sic_rank
    gn = g.assignment[n]
    interf = sum(a.power[i] for i in g.members(gn) if rank[i] < rank[n])
    h = s.gains[n]
    return math.log2(1.0 + h * a.power[n] / (h * interf + s.noise_power))


def achieved_rates(g: Grouping, a: PowerAllocation, s: Scenario) -> np.ndarray:
    return np.array([achievable_rate(n, g, a, s) for n in range(s.n_users)])


# ---------------------------------------------------------------------------
# externalities (positions are 0-based indices into one SIC-ordered group)

def externality_pair(k: int, j: int, rates: Sequence[float], powers: Sequence[float]) -> float:
    """Extra power the k-th member forces onto the later-decoded j-th member."""
    if not 0 <= k < j < len(rates):
        raise ContractViolation(f"need 0 <= k < j < {len(rates)}, got k={k}, j={j}")
    factor = np.exp2(np.sum(rates[k + 1 : j])) if j > k + 1 else 1.0
    return float(powers[k] * (np.exp2(rates[j]) - 1.0) * factor)


def externality_sum(k: int, rates: Sequence[float], powers: Sequence[float]) -> float:
    """Total extra power the k-th member forces onto all later members."""
    if not 0 <= k < len(rates):
        raise ContractViolation(f"position {k} outside group of size {len(rates)}")
    tail = np.sum(rates[k + 1 :])
    return float(powers[k] * np.exp2(tail) - powers[k])


# ---------------------------------------------------------------------------
# PCE

def _insertion_terms(others: list[int], s: Scenario):
    """Prefix power sums and suffix rate sums of a SIC-ordered member list.

    Inserting a user right before position k of ``others`` costs
    ``(2**r - 1) * (up[k] + noise / h) * 2**down[k]``.
    """
    idx = np.asarray(others, dtype=np.int64)
    p = forward_powers(s.gains[idx], s.rates[idx], s.noise_power)
    up = np.concatenate(([0.0], np.cumsum(p)))
    down = np.concatenate((np.cumsum(s.rates[idx][::-1])[::-1], [0.0]))
    return up, down


def pce(n: int, target_group: int, g: Grouping, s: Scenario, exclude: Iterable[int] = ()) -> float:
    """PCE of user ``n`` if it were in ``target_group``.

    The members of ``target_group`` other than ``n`` (and other than anyone in
    ``exclude``) are taken from ``g``; where ``n`` currently sits is ignored.
    """
    if not 0 <= target_group < g.group_count:
        raise DomainError(f"group index {target_group} out of range")
    drop = set(exclude)
    drop.add(n)
    return pce_among(n, (m for m in g.members(target_group) if m not in drop), s)


def pce_among(n: int, others: Iterable[int], s: Scenario) -> float:
    """PCE of user ``n`` joining a group whose other members are ``others``."""
    others = sic_order(others, s)
    r = s.rates[n]
    if r == 0:
        return 0.0
    up, down = _insertion_terms(others, s)
    rank = s.sic_rank
    k = sum(1 for m in others if rank[m] < rank[n])
    return float(((np.exp2(r) - 1.0) * (up[k] + s.noise_power / s.gains[n])) * np.exp2(down[k]))


def insertion_costs(members: Iterable[int], candidates, s: Scenario) -> np.ndarray:
    """PCE of each candidate joining ``members``; candidates must not be members."""
    order = sic_order(members, s)
    cand = np.asarray(candidates, dtype=np.int64)
    up, down = _insertion_terms(order, s)
    k = np.searchsorted(s.sic_rank[order], s.sic_rank[cand])
    cost = np.exp2(s.rates[cand]) - 1.0
    return (cost * (up[k] + s.noise_power / s.gains[cand])) * np.exp2(down[k])


def group_power_without(n: int, members: Iterable[int], s: Scenario) -> float:
    """Total power of a group after removing ``n`` and re-allocating."""
    members = list(members)
    if n not in members:
        raise DomainError(f"user {n} is not in the group")
    return group_power((m for m in members if m != n), s)
