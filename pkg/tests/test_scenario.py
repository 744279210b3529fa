import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sasnet.scenario import (ConfigError, ScenarioConfig, TimeGrid, config_from_dict,
                             dump_scenario, generate_scenario, load_config, load_scenario,
                             noise_power, radio_params, validate_scenario, with_changes)


def test_full_scale_counts_and_altitudes():
    cfg = ScenarioConfig(abs_count=10, lue_count=50, hue_count=50, cbs_count=5,
                         region_size=1.0e6, lue_area_size=2.0e4, sat_altitude=2.0e5,
                         abs_altitude=30.0)
    s = generate_scenario(cfg, 1)
    assert (s.U, s.M_l, s.M_h, s.C) == (10, 50, 50, 5)
    assert s.sat[2] == 2.0e5
    assert np.all(s.abs_init[:, 2] == 30.0)
    assert validate_scenario(s) == []


def test_same_seed_is_bitwise_identical(desk_cfg):
    a = generate_scenario(desk_cfg, 11)
    b = generate_scenario(desk_cfg, 11)
    assert dump_scenario(a) == dump_scenario(b)
    for f in ("sat", "cbs", "abs_init", "lue", "hue"):
        assert getattr(a, f).tobytes() == getattr(b, f).tobytes()


def test_no_lues(desk_cfg):
    s = generate_scenario(dataclasses.replace(desk_cfg, lue_count=0), 3)
    assert s.M_l == 0
    assert s.lue.shape == (s.N, 0, 3)
    assert validate_scenario(s) == []


def test_adding_hues_keeps_lue_draws(desk_cfg):
    a = generate_scenario(desk_cfg, 5)
    b = generate_scenario(dataclasses.replace(desk_cfg, hue_count=9), 5)
    assert np.array_equal(a.lue, b.lue)
    assert np.array_equal(a.abs_init, b.abs_init)


def test_scenario_arrays_read_only(desk):
    with pytest.raises(ValueError):
        desk.lue[0, 0, 0] = 1.0


def test_negative_lue_altitude_reported(desk):
    lue = np.array(desk.lue)
    lue[:, 3, 2] = -1.0
    issues = validate_scenario(with_changes(desk, lue=lue))
    assert issues
    assert all(i.what == "lue" and i.index[1] == 3 for i in issues)
    assert any("z >= 0" in i.message for i in issues)


def test_slot_length_mismatch_reported(desk):
    s = with_changes(desk, time=TimeGrid(100.0, 10, 5.0))
    msgs = [i.message for i in validate_scenario(s)]
    assert any("L_u = T/N" in m for m in msgs)


def test_valid_scenario_clean(desk):
    assert validate_scenario(desk) == []


@pytest.mark.parametrize("B, expected", [(1.0, 10 ** -20.4), (1e7, 10 ** -13.4), (1e4, 10 ** -16.4)])
def test_noise_power(B, expected):
    rp = radio_params(ScenarioConfig())
    assert noise_power(rp, B) == pytest.approx(expected, rel=1e-12)


def test_noise_power_rejects_zero_bandwidth():
    with pytest.raises(ValueError):
        noise_power(radio_params(ScenarioConfig()), 0.0)


def test_unknown_key_named():
    with pytest.raises(ConfigError) as err:
        config_from_dict({"abs_count": 2, "warp_drive": 1})
    assert err.value.keys == ["warp_drive"]


def test_invalid_values_listed():
    with pytest.raises(ConfigError) as err:
        config_from_dict({"abs_count": 0, "v_min": 60.0, "v_max": 50.0})
    assert set(err.value.keys) >= {"abs_count", "v_min", "v_max"}


def test_load_config_rejects_non_mapping(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError):
        load_config(p)


def test_dump_reload_round_trip(desk):
    back = load_scenario(dump_scenario(desk))
    assert dump_scenario(back) == dump_scenario(desk)
    assert back.digest == desk.digest


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31 - 1))
def test_populations_contained(seed):
    cfg = ScenarioConfig(lue_count=40, hue_count=40, slots=3)
    s = generate_scenario(cfg, seed)
    x0, y0, a = s.lue_area
    assert np.all((s.lue[..., 0] >= x0) & (s.lue[..., 0] <= x0 + a))
    assert np.all((s.lue[..., 1] >= y0) & (s.lue[..., 1] <= y0 + a))
    assert np.all((s.hue[..., :2] >= 0) & (s.hue[..., :2] <= s.region_size))
    assert s.time.slot_length * s.N == pytest.approx(s.time.horizon, rel=1e-15)
    assert validate_scenario(s) == []
