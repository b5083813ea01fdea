"""Equal-size reference grouping strategies.

Neither strategy reproduces its original publication in full. Both keep the
behaviour the comparison needs: every group holds exactly N/G users, and
users rank groups by the PCE they would add there.

``baseline_user_preference``
    Users are taken strongest channel first; each joins the non-full group
    where its PCE, given the users placed so far, is lowest.

``baseline_gale_shapley``
    User-proposing deferred acceptance. Each round every unmatched user
    proposes to the group it has not been rejected by with the lowest PCE
    given that group's currently held users. A group keeps up to N/G
    applicants (held users included) ranked by how close their channel gain
    in dB is to the mean gain of the users it held at the start of the round;
    an empty group ranks by channel strength. Rejected users never propose to
    that group again. ``group_pref="farthest"`` flips the group ranking.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigurationError
from ..power import Grouping, PowerAllocation, allocate_all, insertion_costs
from ..scenario import Scenario


def _capacity(s: Scenario) -> int:
    if s.n_users % s.group_count:
        raise ConfigurationError(
            f"equal-size baselines need N divisible by G, got N={s.n_users}, G={s.group_count}"
        )
    return s.n_users // s.group_count


def _sic_sorted(users, s):
    return sorted(users, key=lambda n: s.sic_rank[n])


def baseline_user_preference(s: Scenario) -> tuple[Grouping, PowerAllocation]:
    cap = _capacity(s)
    groups: list[list[int]] = [[] for _ in range(s.group_count)]
    assignment = [0] * s.n_users
    for n in _sic_sorted(range(s.n_users), s):
        costs = np.array([insertion_costs(m, [n], s)[0] if len(m) < cap else np.inf
                          for m in groups])
        g = int(np.argmin(costs))
        groups[g].append(n)
        assignment[n] = g
    grouping = Grouping(tuple(assignment), s.group_count)
    return grouping, allocate_all(grouping, s)


def baseline_gale_shapley(s: Scenario, group_pref: str = "closest") -> tuple[Grouping, PowerAllocation]:
    if group_pref not in ("closest", "farthest"):
        raise ConfigurationError(f"group_pref must be 'closest' or 'farthest', got {group_pref!r}")
    cap = _capacity(s)
    G = s.group_count
    gain_db = 10.0 * np.log10(s.gains)
    sign = 1.0 if group_pref == "closest" else -1.0

    held: list[list[int]] = [[] for _ in range(G)]
    rejected: list[set[int]] = [set() for _ in range(s.n_users)]
    free = _sic_sorted(range(s.n_users), s)
    while free:
        snapshot = [list(h) for h in held]
        proposals: list[list[int]] = [[] for _ in range(G)]
        costs = np.column_stack([insertion_costs(snapshot[g], free, s) for g in range(G)])
        for row, n in enumerate(free):
            costs[row, list(rejected[n])] = np.inf
            proposals[int(np.argmin(costs[row]))].append(n)

        next_free = []
        for g in range(G):
            applicants = snapshot[g] + proposals[g]
            if len(applicants) <= cap:
                held[g] = applicants
                continue
            if snapshot[g]:
                centre = float(np.mean(gain_db[snapshot[g]]))
                key = lambda n: (sign * abs(gain_db[n] - centre), s.sic_rank[n])
            else:
                key = lambda n: (s.sic_rank[n],)
            ranked = sorted(applicants, key=key)
            held[g] = ranked[:cap]
            for n in ranked[cap:]:
                rejected[n].add(g)
                next_free.append(n)
        free = _sic_sorted(next_free, s)

    assignment = [0] * s.n_users
    for g, members in enumerate(held):
        for n in members:
            assignment[n] = g
    grouping = Grouping(tuple(assignment), G)
    return grouping, allocate_all(grouping, s)
