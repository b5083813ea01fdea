import json
import math

import numpy as np
import pytest
from scipy import stats

from nomagroup.errors import ConfigurationError, ScenarioFormatError
from nomagroup.scenario import (
    ChannelModelParams,
    UserProfile,
    dumps_scenario,
    export_users_csv,
    generate_scenario,
    load_scenario,
    loads_scenario,
    noise_power,
    save_scenario,
)


# noise reference values come from plain arithmetic here, not from the module
def test_noise_power_default_dbm():
    dbm = 10 * math.log10(noise_power(ChannelModelParams()) * 1e3)
    assert dbm == pytest.approx(-121.447, abs=5e-4)
    assert dbm == pytest.approx(-174 + 10 * math.log10(180e3), rel=1e-12)


def test_noise_power_default_watts():
    assert noise_power(ChannelModelParams()) == pytest.approx(7.166e-16, rel=1e-4)


def test_noise_power_one_hertz_zero_dbm():
    p = ChannelModelParams(bandwidth=1.0, noise_psd=0.0)
    assert noise_power(p) == pytest.approx(1e-3, rel=1e-15)


def test_generate_reference_cell():
    s = generate_scenario(25, 5, seed=1)
    assert s.n_users == 25 and s.group_count == 5
    d = np.array([u.distance for u in s.users])
    assert d.min() >= 35 and d.max() <= 500
    assert np.all((s.rates >= 0.5) & (s.rates <= 8.0))
    assert not any(u.is_virtual for u in s.users)


def test_same_seed_same_bytes():
    assert dumps_scenario(generate_scenario(30, 6, 99)) == dumps_scenario(generate_scenario(30, 6, 99))
    assert dumps_scenario(generate_scenario(30, 6, 99)) != dumps_scenario(generate_scenario(30, 6, 100))


def test_prefix_stability():
    # draws are per user in id order, so a larger population extends a smaller one
    a, b = generate_scenario(10, 2, 5), generate_scenario(20, 2, 5)
    assert a.users == b.users[:10]


def test_squared_distance_uniform_on_annulus():
    s = generate_scenario(4000, 10, seed=3)
    d2 = np.array([u.distance for u in s.users]) ** 2
    lo, hi = 35.0**2, 500.0**2
    assert stats.kstest(d2, stats.uniform(loc=lo, scale=hi - lo).cdf).pvalue > 1e-3


def test_gain_matches_pathloss_and_unit_mean_fading():
    s = generate_scenario(4000, 10, seed=4)
    d = np.array([u.distance for u in s.users])
    pl = 128.1 + 37.6 * np.log10(d / 1000.0)
    fading = s.gains / 10.0 ** (-pl / 10.0)
    # |h|^2 of a unit-power Rayleigh coefficient is Exp(1)
    assert stats.kstest(fading, "expon").pvalue > 1e-3


def test_invalid_params():
    with pytest.raises(ConfigurationError):
        ChannelModelParams(min_distance=600.0)
    with pytest.raises(ConfigurationError):
        ChannelModelParams(rate_min=3.0, rate_max=1.0)
    with pytest.raises(ConfigurationError):
        generate_scenario(0, 1, 0)


def test_user_profile_validation():
    with pytest.raises(ConfigurationError):
        UserProfile(id=0, channel_gain_sq=0.0, target_rate=1.0)
    with pytest.raises(ConfigurationError):
        UserProfile(id=0, channel_gain_sq=1.0, target_rate=0.0)
    UserProfile(id=0, channel_gain_sq=1.0, target_rate=0.0, is_virtual=True)


def test_sic_rank_ties_by_id():
    from conftest import make_scenario

    s = make_scenario([1.0, 2.0, 1.0, 2.0], [1, 1, 1, 1])
    assert list(s.sic_rank) == [2, 0, 3, 1]


def test_round_trip(tmp_path):
    s = generate_scenario(17, 4, seed=2024)
    path = tmp_path / "s.json"
    save_scenario(s, path)
    assert load_scenario(path) == s
    assert loads_scenario(dumps_scenario(s)) == s


def test_missing_group_count():
    doc = json.loads(dumps_scenario(generate_scenario(3, 1, 0)))
    del doc["group_count"]
    with pytest.raises(ScenarioFormatError) as info:
        loads_scenario(json.dumps(doc))
    assert info.value.field == "group_count"
    assert "group_count" in str(info.value)


def test_duplicate_ids_reported_with_line():
    text = dumps_scenario(generate_scenario(3, 1, 0)).replace('"id": 2', '"id": 0')
    with pytest.raises(ScenarioFormatError) as info:
        loads_scenario(text)
    assert info.value.field == "id"
    third_user = [i for i, ln in enumerate(text.splitlines()) if '"id"' in ln][2]
    assert info.value.line == third_user + 1


def test_missing_user_field_line():
    text = dumps_scenario(generate_scenario(3, 1, 0))
    lines = text.splitlines()
    k = next(i for i, ln in enumerate(lines) if '"id": 1' in ln)
    lines[k] = lines[k].replace('"target_rate"', '"rate"')
    with pytest.raises(ScenarioFormatError) as info:
        loads_scenario("\n".join(lines))
    assert info.value.field == "target_rate" and info.value.line == k + 1


def test_malformed_json():
    with pytest.raises(ScenarioFormatError) as info:
        loads_scenario('{"schema_version": 1,\n "seed": }')
    assert info.value.line == 2


def test_csv_export(tmp_path):
    s = generate_scenario(5, 1, 0)
    export_users_csv(s, tmp_path / "u.csv")
    rows = (tmp_path / "u.csv").read_text().splitlines()
    assert rows[0] == "id,distance_m,channel_gain_sq,target_rate"
    assert len(rows) == 6
    assert float(rows[3].split(",")[2]) == s.users[2].channel_gain_sq
