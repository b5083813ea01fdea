"""A seeded cell: users, distances, channel gains, noise."""

import math
import tempfile
from pathlib import Path

import numpy as np

from nomagroup.scenario import ChannelModelParams, generate_scenario, load_scenario, noise_power, save_scenario

params = ChannelModelParams()  # 500 m cell, 35 m exclusion, 180 kHz, -174 dBm/Hz
sigma2 = noise_power(params)
print(f"noise power: {sigma2:.4e} W = {10 * math.log10(sigma2 * 1e3):.3f} dBm")

s = generate_scenario(25, 5, seed=7, params=params)
d = np.array([u.distance for u in s.users])
print(f"{s.n_users} users in {s.group_count} groups")
print(f"distance range {d.min():.1f} .. {d.max():.1f} m")
print(f"target rates   {s.rates.min():.2f} .. {s.rates.max():.2f} bps/Hz")

# gains in dB follow the distance but fading scatters them
gain_db = 10 * np.log10(s.gains)
for k in np.argsort(d)[:5]:
    print(f"  user {k:2d}: {d[k]:6.1f} m  gain {gain_db[k]:7.2f} dB  SIC rank {s.sic_rank[k]}")

# the standalone power is what a user would need alone in its group
print(f"sum of standalone powers: {s.standalone_power().sum():.4g} W")

# files round-trip exactly
with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "cell.json"
    save_scenario(s, path)
    print(path.read_text().splitlines()[16])
    assert load_scenario(path) == s
    print("round trip ok")
