import pytest
from hypothesis import given, strategies as st

from darwinbrain.config import Config, ConfigError, dump_config, load_config, parse_config


def test_defaults():
    c = Config()
    assert (c.k_min, c.t_steps, c.dt) == (5, 100, 0.1)
    assert (c.rate_a, c.rate_m, c.crossover_rate) == (0.3, 0.05, 0.1)
    assert (c.theta_fix, c.g_fix, c.shc_p_w) == (0.9, 10, 0.05)
    assert (c.mi_window, c.mi_bins) == (256, 8)


def test_parse_with_comments(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("# run settings\nk_min = 3  # fewer samples\n\ndt=0.05\n")
    c = load_config(p)
    assert c.k_min == 3 and c.dt == 0.05 and isinstance(c.k_min, int)


def test_unknown_key_fails():
    with pytest.raises(ConfigError, match="line 2"):
        parse_config("k_min = 3\nbogus = 1\n")


def test_bad_value_fails():
    with pytest.raises(ConfigError, match="k_min"):
        parse_config("k_min = three")
    with pytest.raises(ConfigError):
        parse_config("rate_a = 1.5")
    with pytest.raises(ConfigError):
        parse_config("no equals sign")


@given(st.integers(1, 50), st.floats(0.001, 1.0), st.floats(0.0, 1.0))
def test_dump_parse_round_trip(k, dt, rate):
    c = Config(k_min=k, dt=dt, rate_m=rate)
    assert parse_config(dump_config(c)) == c
