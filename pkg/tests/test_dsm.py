import numpy as np
import pytest
from scipy import signal

from dsm import (ModulatorState, NtfSpec, density_error_bound, modulator_run, modulator_step,
                 ntf_bode, ntf_coefficients, ntf_eval, ntf_eval_z, ntf_first_order,
                 ntf_impulse_response, ntf_notch, stability_scan)

NOTCH_RATIOS = (0.05, 0.075, 0.0925)


def all_ntfs():
    return [ntf_first_order()] + [ntf_notch(r) for r in NOTCH_RATIOS]


def test_first_order_values():
    ntf = ntf_first_order()
    assert ntf.order == 1
    assert ntf_eval_z(ntf, 1.0) == 0
    assert ntf_eval_z(ntf, -1.0) == pytest.approx(2.0)
    assert ntf_eval_z(ntf, 1e9) == pytest.approx(1.0, abs=1e-8)
    assert ntf_eval(ntf, 0.0) == 0
    assert ntf_eval(ntf, np.pi) == pytest.approx(2.0)


def test_notch_coefficients_match_hand_expansion():
    b, a = ntf_coefficients(ntf_notch(0.075))
    assert b == pytest.approx([1.0, -2.94474, 2.94474, -1.0], abs=1e-5)
    assert a == pytest.approx([1.0, -2.65027, 2.38524, -0.729], abs=1e-5)


@pytest.mark.parametrize("ratio", NOTCH_RATIOS + (0.076, 0.5))
def test_notch_zero_is_exact(ratio):
    ntf = ntf_notch(ratio)
    assert ntf.order == 3
    assert ntf_eval(ntf, np.pi * ratio) == 0
    assert ntf_eval_z(ntf, 1.0) == pytest.approx(0.0, abs=1e-12)
    assert abs(ntf_eval_z(ntf, 1e8)) == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("ntf", all_ntfs())
def test_conjugate_symmetry(ntf):
    theta = np.linspace(-np.pi, np.pi, 257)
    assert ntf_eval(ntf, theta) == pytest.approx(np.conj(ntf_eval(ntf, -theta)), abs=1e-12)


@pytest.mark.parametrize("ratio,radius", [(0.0, 0.9), (1.0, 0.9), (-0.1, 0.9), (0.075, 1.0),
                                          (0.075, 0.0)])
def test_notch_rejects_out_of_range(ratio, radius):
    with pytest.raises(ValueError):
        ntf_notch(ratio, radius)


def test_ntf_spec_validation():
    with pytest.raises(ValueError, match="unit circle"):
        NtfSpec(zeros=(1.0,), poles=(1.2,))
    with pytest.raises(ValueError, match="conjugate"):
        NtfSpec(zeros=(1.0, 1j), poles=(0.0, 0.0))
    with pytest.raises(ValueError, match="z = 1"):
        NtfSpec(zeros=(0.5,), poles=(0.0,))
    with pytest.raises(ValueError, match="as many zeros"):
        NtfSpec(zeros=(1.0, -1.0), poles=(0.0,))


def test_ntf_eval_rejects_non_finite_angle():
    with pytest.raises(ValueError):
        ntf_eval(ntf_first_order(), np.nan)


def test_bode_and_impulse_response():
    ratio, mag, phase = ntf_bode(ntf_notch(0.075), 2001)
    assert ratio[0] == 0.0 and ratio[-1] == 1.0
    assert mag[0] < -200.0
    assert mag[150] < -200.0  # 0.075 sits exactly on the grid
    assert mag.shape == phase.shape

    h = ntf_impulse_response(ntf_first_order(), 4)
    assert h == pytest.approx([1.0, -1.0, 0.0, 0.0])


@pytest.mark.parametrize("d,expected", [(1.0, 1), (0.0, 0)])
def test_step_constant_extremes(d, expected):
    state = ModulatorState.initial(ntf_notch(0.075))
    assert [modulator_step(state, d) for _ in range(200)] == [expected] * 200
    assert state.sample_index == 200


def test_step_half_density_alternates():
    state = ModulatorState.initial(ntf_first_order())
    bits = [modulator_step(state, 0.5) for _ in range(10)]
    assert bits == [0, 1] * 5
    assert np.mean(bits) == 0.5


def test_step_matches_run():
    ntf = ntf_notch(0.076)
    d = np.random.default_rng(3).uniform(0.1, 0.9, 500)
    state = ModulatorState.initial(ntf)
    stepped = [modulator_step(state, x) for x in d]
    bits, errors = modulator_run(ntf, d)
    assert stepped == bits.tolist()
    assert state.last_error == errors[-1]


def test_density_out_of_range_rejected():
    with pytest.raises(ValueError):
        modulator_run(ntf_first_order(), [0.5, 1.2])
    with pytest.raises(ValueError):
        modulator_step(ModulatorState.initial(ntf_first_order()), -0.1)


@pytest.mark.parametrize("ntf", all_ntfs())
def test_reconstruction_identity(ntf):
    d = np.random.default_rng(11).uniform(0.0, 1.0, 10_000)
    bits, errors = modulator_run(ntf, d)
    b, a = ntf_coefficients(ntf)
    shaped = signal.lfilter(b, a, errors)
    assert np.max(np.abs(bits - d - shaped)) <= 1e-6


def test_density_preserved_first_order():
    n = 1_000_000
    bits, _ = modulator_run(ntf_first_order(), np.full(n, 0.963))
    assert abs(bits.mean() - 0.963) <= 2.0 / n


def test_density_preserved_notch():
    n = 1_000_000
    ntf = ntf_notch(0.076)
    bits, _ = modulator_run(ntf, np.full(n, 0.963))
    assert abs(bits.mean() - 0.963) <= density_error_bound(ntf, n)


def test_density_error_bound_first_order():
    assert density_error_bound(ntf_first_order(), 1000) == pytest.approx(1e-3)
    assert density_error_bound(ntf_notch(0.075), 1000) > 1e-3


def test_ramp_mean():
    n = 20_000
    bits, errors = modulator_run(ntf_first_order(), np.linspace(0.0, 1.0, n))
    assert abs(bits.mean() - 0.5) <= 2.0 / n
    assert errors.min() >= -1.0 - 1e-9 and errors.max() <= 1e-9


def test_sinusoid_error_stays_bounded():
    n = np.arange(50_000)
    d = 0.5 + 0.45 * np.sin(2 * np.pi * n / 6000)
    _, errors = modulator_run(ntf_notch(0.075), d)
    assert errors.min() >= -1.0 - 1e-9
    assert errors.max() <= 1e-9


def test_stability_scan_short_horizon():
    report = stability_scan(ntf_notch(0.075), np.arange(0.05, 0.951, 0.05), 20_000)
    assert report.stable
    assert report.min_error >= -1.0 - 1e-9


def test_stability_scan_threshold_hook():
    report = stability_scan(ntf_first_order(), [0.963], 10_000, threshold=0.5)
    assert not report.stable
    d, index, error = report.violations[0]
    assert d == 0.963
    assert index == 0
    assert error == pytest.approx(0.037)
    assert len(report.violations) <= 16


@pytest.mark.slow
@pytest.mark.parametrize("ntf", all_ntfs())
def test_stability_scan_full_grid(ntf):
    d_grid = np.round(np.arange(0.05, 0.9501, 0.01), 10)
    report = stability_scan(ntf, d_grid, 1_000_000)
    assert report.violations == []
