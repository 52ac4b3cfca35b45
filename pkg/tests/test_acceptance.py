"""End-to-end checks of the modulated link against the prototype's measured behaviour.

Ripple is judged on the secondary current envelope, the quantity the prototype
reports for its oscillation and suppression results.
"""
import csv

import pytest

from config_manager import ExperimentConfig
from dsm import ntf_first_order, ntf_notch
from experiments import DEVIATION_POINT, DEVIATION_RATIOS, measure_ripple, run_experiment

pytestmark = pytest.mark.slow

NOTCH = 0.076
# A deviated notch leaves one of the two coupled modes (ws / sqrt(1 +- k)) with
# 1.6x to 1.8x the ideal noise gain, and only the coil ESR damps the beat.
DEVIATED_MAX_RIPPLE = 40.0


def secondary_ripple(cfg, side, ntf, d):
    return measure_ripple(cfg.circuit, cfg, side, ntf, d).ripple_i2


@pytest.fixture(scope="module")
def cfg():
    return ExperimentConfig()


@pytest.fixture(scope="module")
def ntf1_ripple(cfg):
    return secondary_ripple(cfg, "secondary", ntf_first_order(), DEVIATION_POINT)


def test_first_order_oscillates(ntf1_ripple):
    assert ntf1_ripple > 40.0


@pytest.mark.parametrize("side", ["primary", "secondary"])
def test_first_order_oscillates_on_either_side(cfg, side):
    assert secondary_ripple(cfg, side, ntf_first_order(), DEVIATION_POINT) > 40.0


def test_notch_suppresses_oscillation(cfg, ntf1_ripple):
    notched = secondary_ripple(cfg, "secondary", ntf_notch(NOTCH), DEVIATION_POINT)
    assert notched <= 25.0
    assert notched <= 0.5 * ntf1_ripple


def test_notch_bounds_full_sweep(cfg):
    ntf = ntf_notch(NOTCH)
    start, step = 0.203, 0.02
    points = [round(start + step * i, 10) for i in range(40)] + [1.0]
    ripples = {d: secondary_ripple(cfg, "secondary", ntf, d) for d in points}
    offenders = {d: r for d, r in ripples.items() if r > 25.0}
    assert offenders == {}


def test_deviated_notch_tolerance(cfg):
    points = sorted({round(0.90 + 0.01 * i, 10) for i in range(11)} | {DEVIATION_POINT})

    def ripples(ratio):
        ntf = ntf_notch(ratio)
        return {d: secondary_ripple(cfg, "secondary", ntf, d) for d in points}

    ideal = max(ripples(NOTCH).values())
    for ratio in DEVIATION_RATIOS:
        deviated = ripples(ratio)
        assert deviated[DEVIATION_POINT] <= 30.0
        assert max(deviated.values()) <= DEVIATED_MAX_RIPPLE
        assert max(deviated.values()) >= ideal


def test_sinusoid_tracking(tmp_path, cfg):
    assert run_experiment("sinusoid-tracking", cfg, tmp_path) == 0
    with (tmp_path / "tracking_summary.csv").open(newline="", encoding="utf-8") as f:
        rows = {row[0]: row for row in list(csv.reader(f))[1:]}
    notch = rows[f"ntf3_{NOTCH:g}"]
    assert float(notch[1]) >= 0.9
    assert float(notch[3]) < float(rows["ntf1"][3])
