"""SIC power allocation, externalities and PCE on a two-user group."""

from nomagroup.power import (
    Grouping,
    achieved_rates,
    allocate_all,
    externality_pair,
    externality_sum,
    group_power,
    pce,
)
from nomagroup.scenario import Scenario, UserProfile

# user 0 has the stronger channel, so it is decoded first and sees only noise
users = (UserProfile(0, 4.0, 1.0), UserProfile(1, 1.0, 1.0))
s = Scenario(users=users, group_count=2, noise_power=1.0)

together = Grouping((0, 0), 2)
a = allocate_all(together, s)
print("powers together:", a.power, "total", a.total)
print("achieved rates:", achieved_rates(together, a, s))

apart = Grouping((0, 1), 2)
print("powers apart:   ", allocate_all(apart, s).power)

# user 0's presence costs user 1 an extra 0.25 W
print("externality 0 -> 1:", externality_pair(0, 1, s.rates, a.power))
print("closed form sum:   ", externality_sum(0, s.rates, a.power))

# PCE: what user 0 adds to the group, own power plus externality
print("PCE of user 0 in group 0:", pce(0, 0, together, s))
print("group power with / without:", group_power([0, 1], s), group_power([1], s))

# moving one user changes total power by the difference of its two PCEs
before, after = allocate_all(together, s).total, allocate_all(apart, s).total
print("move 1 to group 1: dP =", after - before,
      " PCE difference =", pce(1, 1, together, s) - pce(1, 0, together, s))
