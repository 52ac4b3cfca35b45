import numpy as np
import pytest

from config_manager import ConfigError, DProfile, ExperimentConfig, load_config
from plant import CircuitParams
from utils import parse_si


def write(tmp_path, text):
    path = tmp_path / "lab.conf"
    path.write_text(text, encoding="utf-8")
    return path


@pytest.mark.parametrize("text,expected", [
    ("31.7uH", 31.7e-6), ("8.87nF", 8.87e-9), ("105mOhm", 0.105), ("300kHz", 300e3),
    ("50", 50.0), ("2MHz", 2e6), ("4.7µF", 4.7e-6), ("1e-3", 1e-3), (" 12 pF ", 12e-12),
    ("1G", 1e9),
])
def test_parse_si(text, expected):
    assert parse_si(text) == pytest.approx(expected)


@pytest.mark.parametrize("text", ["", "abc", "1.2.3", "5 x y"])
def test_parse_si_rejects_garbage(text):
    with pytest.raises(ValueError):
        parse_si(text)


def test_empty_file_gives_defaults(tmp_path):
    cfg = load_config(write(tmp_path, ""))
    assert cfg.circuit == CircuitParams()
    assert cfg.circuit.L1 == 31.7e-6
    assert cfg.circuit.R2 == 102e-3
    assert cfg.circuit.Vg == cfg.circuit.Vo == 50.0
    assert cfg.circuit.k == 0.152
    assert cfg.circuit.fs == 300e3
    assert cfg.ntf_kind == "first_order"
    assert cfg.notch_ratio is None


def test_values_with_units_and_comments(tmp_path):
    cfg = load_config(write(tmp_path, """
# prototype with a looser coupling
L1 = 30uH
k = 0.12      # measured
fs = 310kHz
steps_per_period = 256
d_profile = sweep 0.2 1 0.1
jobs = 4
"""))
    assert cfg.circuit.L1 == pytest.approx(30e-6)
    assert cfg.circuit.k == 0.12
    assert cfg.circuit.fs == pytest.approx(310e3)
    assert cfg.sim.steps_per_period == 256
    assert cfg.d_profile == DProfile("sweep", (0.2, 1.0, 0.1))
    assert cfg.jobs == 4


def test_coupling_above_one_rejected(tmp_path):
    with pytest.raises(ConfigError, match="k"):
        load_config(write(tmp_path, "k = 1.2\n"))


def test_notch_accepted(tmp_path):
    cfg = load_config(write(tmp_path, "ntf_kind = notch\nnotch_ratio = 0.076\n"))
    ntf = cfg.build_ntf()
    assert ntf.order == 3
    assert cfg.design_notch_ratio == 0.076


def test_unknown_key_is_named(tmp_path):
    with pytest.raises(ConfigError, match="frequency_hz"):
        load_config(write(tmp_path, "frequency_hz = 1\n"))


@pytest.mark.parametrize("text", [
    "ntf_kind = notch\n",
    "notch_ratio = 0.076\n",
    "ntf_kind = notch\nnotch_ratio = 1.5\n",
    "ntf_kind = fifth\n",
    "side = both\n",
    "steps_per_period = 63\n",
    "duration_periods = 12.5\n",
    "blanking_fraction = 0.6\n",
    "d_profile = constant 1.5\n",
    "d_profile = sinusoid 0.5 0.6 500\n",
    "d_profile = square 0.5\n",
    "l1 = 3.3.3uH\n",
    "vg = 50\nvg = 60\n",
])
def test_invalid_files_rejected(tmp_path, text):
    with pytest.raises(ConfigError):
        load_config(write(tmp_path, text))


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "missing.conf")


def test_sweep_points_include_stop():
    points = DProfile("sweep", (0.203, 1.0, 0.02)).points()
    assert points.size == 41
    assert points[0] == 0.203
    assert points[-2] == pytest.approx(0.983)
    assert points[-1] == 1.0


def test_profile_samples():
    t = np.array([0.0, 0.0005, 0.001, 0.0015])
    sine = DProfile("sinusoid", (0.5, 0.5, 500.0)).sample(t)
    assert sine == pytest.approx([0.5, 1.0, 0.5, 0.0], abs=1e-12)
    ramp = DProfile.parse("ramp 0 1 1m").sample(t)
    assert ramp == pytest.approx([0.0, 0.5, 1.0, 1.0])
    assert DProfile("constant", (0.3,)).sample(t) == pytest.approx([0.3] * 4)


def test_cli_overrides():
    cfg = ExperimentConfig()
    notch = cfg.with_overrides(ntf="notch")
    assert notch.ntf_kind == "notch"
    assert notch.notch_ratio == pytest.approx(0.076)
    assert notch.with_overrides(ntf="first").notch_ratio is None
    assert cfg.with_overrides(ntf="notch", notch_ratio=0.065).notch_ratio == 0.065
    assert cfg.with_overrides(side="primary", jobs=3).side == "primary"
    with pytest.raises(ConfigError):
        cfg.with_overrides(jobs=0)
