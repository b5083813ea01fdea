"""Seeded problem instances: users, channel gains, noise power, and file I/O.

All powers are linear watts internally; dB and dBm only appear in the channel
model parameters and at reporting boundaries.

Random stream order is fixed so that other implementations can reproduce a
scenario draw for draw: a ``numpy.random.PCG64`` generator seeded with the
scenario seed, then for each user in id order

1. one uniform on [0, 1) for the squared distance,
2. two standard normals (real, imaginary) for the Rayleigh coefficient,
3. one uniform on [0, 1) for the target rate.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, ScenarioFormatError

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class ChannelModelParams:
    cell_radius: float = 500.0  # m
    min_distance: float = 35.0  # m
    pathloss_const: float = 128.1  # dB
    pathloss_slope: float = 37.6  # dB per decade of km
    bandwidth: float = 180e3  # Hz
    noise_psd: float = -174.0  # dBm/Hz
    rate_min: float = 0.5  # bps/Hz
    rate_max: float = 8.0  # bps/Hz

    def __post_init__(self):
        if not 0 < self.min_distance < self.cell_radius:
            raise ConfigurationError(
                f"need 0 < min_distance < cell_radius, got "
                f"{self.min_distance} and {self.cell_radius}"
            )
        if self.bandwidth <= 0:
            raise ConfigurationError(f"bandwidth must be positive, got {self.bandwidth}")
        if not 0 <= self.rate_min <= self.rate_max:
            raise ConfigurationError(
                f"need 0 <= rate_min <= rate_max, got {self.rate_min}, {self.rate_max}"
            )

    def pathloss_db(self, distance_m):
        return self.pathloss_const + self.pathloss_slope * np.log10(
            np.asarray(distance_m, dtype=float) / 1000.0
        )


@dataclass(frozen=True)
class UserProfile:
    id: int
    channel_gain_sq: float
    target_rate: float
    distance: float | None = None
    is_virtual: bool = False

    def __post_init__(self):
        if self.id < 0:
            raise ConfigurationError(f"user id must be >= 0, got {self.id}")
        if self.target_rate < 0:
            raise ConfigurationError(f"user {self.id}: negative target rate")
        if self.is_virtual:
            if self.target_rate != 0:
                raise ConfigurationError(f"virtual user {self.id} must have rate 0")
        else:
            if not (self.channel_gain_sq > 0 and math.isfinite(self.channel_gain_sq)):
                raise ConfigurationError(
                    f"user {self.id}: channel gain must be positive and finite, "
                    f"got {self.channel_gain_sq}"
                )
            if self.target_rate == 0:
                raise ConfigurationError(
                    f"user {self.id}: only virtual users may have rate 0"
                )


@dataclass(frozen=True)
class Scenario:
    """A user population to be split into ``group_count`` orthogonal groups.

    Users are referred to by their position in ``users`` everywhere else in
    the package; ``users[k].id`` is only used for SIC tie-breaking and I/O.
    """

    users: tuple[UserProfile, ...]
    group_count: int
    noise_power: float
    seed: int = 0
    params: ChannelModelParams = field(default_factory=ChannelModelParams)

    def __post_init__(self):
        object.__setattr__(self, "users", tuple(self.users))
        if self.group_count < 1:
            raise ConfigurationError(f"group_count must be >= 1, got {self.group_count}")
        if not (self.noise_power > 0 and math.isfinite(self.noise_power)):
            raise ConfigurationError(f"noise_power must be positive, got {self.noise_power}")
        ids = [u.id for u in self.users]
        if len(set(ids)) != len(ids):
            dup = sorted({i for i in ids if ids.count(i) > 1})
            raise ConfigurationError(f"duplicate user ids: {dup}")
        if any(u.is_virtual for u in self.users):
            raise ConfigurationError("a Scenario holds real users only")

    @property
    def n_users(self) -> int:
        return len(self.users)

    @cached_property
    def gains(self) -> np.ndarray:
        return _frozen(np.array([u.channel_gain_sq for u in self.users], dtype=float))

    @cached_property
    def rates(self) -> np.ndarray:
        return _frozen(np.array([u.target_rate for u in self.users], dtype=float))

    @cached_property
    def ids(self) -> np.ndarray:
        return _frozen(np.array([u.id for u in self.users], dtype=np.int64))

    @cached_property
    def sic_rank(self) -> np.ndarray:
        """Rank of each user in the global SIC order (0 = strongest channel).

        Order is descending ``channel_gain_sq`` with ties broken by ascending
        user id, so "user i decodes after user j" is ``rank[i] > rank[j]``.
        """
        order = np.lexsort((self.ids, -self.gains))
        rank = np.empty(self.n_users, dtype=np.int64)
        rank[order] = np.arange(self.n_users)
        return _frozen(rank)

    def standalone_power(self) -> np.ndarray:
        """Power each user needs when alone in its group."""
        return (np.exp2(self.rates) - 1.0) * self.noise_power / self.gains


def _frozen(a):
    a.setflags(write=False)
    return a


def noise_power(params: ChannelModelParams) -> float:
    """Thermal noise over one channel, in watts."""
    dbm = params.noise_psd + 10.0 * math.log10(params.bandwidth)
    return 10.0 ** (dbm / 10.0) / 1000.0


def generate_scenario(
    n_users: int,
    group_count: int,
    seed: int,
    params: ChannelModelParams | None = None,
) -> Scenario:
    if params is None:
        params = ChannelModelParams()
    if n_users < 1:
        raise ConfigurationError(f"n_users must be >= 1, got {n_users}")
    if group_count < 1:
        raise ConfigurationError(f"group_count must be >= 1, got {group_count}")

    rng = np.random.Generator(np.random.PCG64(seed))
    r0_sq = params.min_distance**2
    span = params.cell_radius**2 - r0_sq
    users = []
    for uid in range(n_users):
        d = math.sqrt(r0_sq + rng.random() * span)
        re, im = rng.standard_normal(2)
        fading = (re * re + im * im) / 2.0
        u = rng.random()
        rate = params.rate_min + u * (params.rate_max - params.rate_min)
        gain = 10.0 ** (-float(params.pathloss_db(d)) / 10.0) * fading
        users.append(UserProfile(id=uid, channel_gain_sq=gain, target_rate=rate, distance=d))
    return Scenario(
        users=tuple(users),
        group_count=group_count,
        noise_power=noise_power(params),
        seed=seed,
        params=params,
    )


# ---------------------------------------------------------------------------
# persistence

_USER_COLUMNS = ("id", "distance_m", "channel_gain_sq", "target_rate")


def _num(x):
    if x is None:
        return "null"
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return format(float(x), ".17g")


def dumps_scenario(s: Scenario) -> str:
    """Serialize to the scenario JSON format, one user per line.

    Floats are written with 17 significant digits, which round-trips IEEE
    doubles exactly.
    """
    head = {
        "schema_version": SCHEMA_VERSION,
        "seed": int(s.seed),
        "group_count": int(s.group_count),
        "noise_power_w": "@NOISE@",
        "params": {k: "@%s@" % k for k in asdict(s.params)},
    }
    text = json.dumps(head, indent=2)
    text = text.replace('"@NOISE@"', _num(s.noise_power))
    for k, v in asdict(s.params).items():
        text = text.replace('"@%s@"' % k, _num(v))
    rows = []
    for u in s.users:
        vals = (u.id, u.distance, u.channel_gain_sq, u.target_rate)
        body = ", ".join(f'"{c}": {_num(v)}' for c, v in zip(_USER_COLUMNS, vals))
        rows.append("    {" + body + "}")
    users = '  "users": [\n' + ",\n".join(rows) + "\n  ]"
    return text[:-2] + ",\n" + users + "\n}\n"


def save_scenario(s: Scenario, path) -> None:
    Path(path).write_text(dumps_scenario(s))


def _require(obj, key, where, line=None):
    if not isinstance(obj, dict) or key not in obj:
        raise ScenarioFormatError(f"missing required field in {where}", field=key, line=line)
    return obj[key]


def _user_lines(text):
    """Line number (1-based) of each user object in the ``users`` array."""
    lines = text.splitlines()
    start = next((i for i, ln in enumerate(lines) if '"users"' in ln), None)
    if start is None:
        return []
    return [i + 1 for i in range(start, len(lines)) if '"id"' in lines[i]]


def loads_scenario(text: str) -> Scenario:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioFormatError(f"invalid JSON: {exc.msg}", line=exc.lineno) from exc
    if not isinstance(raw, dict):
        raise ScenarioFormatError("top level must be a JSON object", line=1)

    version = _require(raw, "schema_version", "scenario")
    if version != SCHEMA_VERSION:
        raise ScenarioFormatError(f"unsupported schema_version {version}", field="schema_version")
    seed = _require(raw, "seed", "scenario")
    group_count = _require(raw, "group_count", "scenario")
    noise = _require(raw, "noise_power_w", "scenario")
    praw = _require(raw, "params", "scenario")
    try:
        params = ChannelModelParams(**{k: float(_require(praw, k, "params")) for k in asdict(ChannelModelParams())})
    except ConfigurationError as exc:
        raise ScenarioFormatError(str(exc), field="params") from exc

    lines = _user_lines(text)
    users = []
    seen = {}
    for k, u in enumerate(_require(raw, "users", "scenario")):
        line = lines[k] if k < len(lines) else None
        where = f"users[{k}]"
        uid = _require(u, "id", where, line)
        if not isinstance(uid, int) or isinstance(uid, bool):
            raise ScenarioFormatError(f"{where}: id must be an integer", field="id", line=line)
        if uid in seen:
            raise ScenarioFormatError(
                f"duplicate user id {uid} (first at users[{seen[uid]}])", field="id", line=line
            )
        seen[uid] = k
        try:
            users.append(
                UserProfile(
                    id=uid,
                    channel_gain_sq=float(_require(u, "channel_gain_sq", where, line)),
                    target_rate=float(_require(u, "target_rate", where, line)),
                    distance=None if u.get("distance_m") is None else float(u["distance_m"]),
                )
            )
        except ScenarioFormatError:
            raise
        except ConfigurationError as exc:
            raise ScenarioFormatError(f"{where}: {exc}", line=line) from exc
        except (TypeError, ValueError) as exc:
            raise ScenarioFormatError(f"{where}: non-numeric value", line=line) from exc
    try:
        return Scenario(
            users=tuple(users),
            group_count=int(group_count),
            noise_power=float(noise),
            seed=int(seed),
            params=params,
        )
    except ConfigurationError as exc:
        raise ScenarioFormatError(str(exc)) from exc


def load_scenario(path) -> Scenario:
    return loads_scenario(Path(path).read_text())


def export_users_csv(s: Scenario, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(_USER_COLUMNS)
        for u in s.users:
            w.writerow([u.id, _num(u.distance) if u.distance is not None else "",
                        _num(u.channel_gain_sq), _num(u.target_rate)])
