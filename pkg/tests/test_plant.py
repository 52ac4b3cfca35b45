import dataclasses

import numpy as np
import pytest

from analysis import envelope
from plant import (SimConfig, SimulationDivergedError, bridge_fundamental,
                   fundamental_amplitude, phasor_initial_state, power_balance, simulate,
                   steady_state_phasor)

ONES = np.ones(4096, dtype=np.int8)
ZEROS = np.zeros(4096, dtype=np.int8)


def stored_energy(trace, p, k):
    return 0.5 * (p.L1 * trace.i1[k] ** 2 + p.L2 * trace.i2[k] ** 2
                  + 2 * p.M * trace.i1[k] * trace.i2[k]
                  + p.C1 * trace.vc1[k] ** 2 + p.C2 * trace.vc2[k] ** 2)


def test_defaults_and_derived_values(params):
    assert params.M == pytest.approx(4.664e-6, rel=1e-3)
    assert params.mutual_reactance == pytest.approx(8.79, abs=0.01)
    assert params.omega_s == pytest.approx(2 * np.pi * 300e3)
    assert params.is_fully_resonant()


def test_envelope_settling(params):
    assert params.envelope_time_constant == pytest.approx(2 * 31.7e-6 / 105e-3, rel=1e-9)
    assert params.settle_periods() == 906
    lossy = dataclasses.replace(params, R1=1.0, R2=1.0)
    assert lossy.settle_periods() < params.settle_periods()


@pytest.mark.parametrize("field,value", [("k", 1.0), ("k", 1.2), ("L1", 0.0), ("R2", -1.0),
                                         ("fs", float("nan"))])
def test_invalid_params_rejected(params, field, value):
    with pytest.raises(ValueError):
        dataclasses.replace(params, **{field: value})


@pytest.mark.parametrize("kwargs", [dict(steps_per_period=32), dict(steps_per_period=513),
                                    dict(duration_periods=100, transient_discard_periods=100)])
def test_sim_config_validation(kwargs):
    with pytest.raises(ValueError):
        SimConfig(**kwargs)


def test_phasor_decoupled_coils(params):
    i1, i2 = steady_state_phasor(dataclasses.replace(params, k=0.0), 60.0, 60.0)
    assert i2 == 0
    assert abs(i1) > 0


def test_phasor_zero_drive(params):
    assert steady_state_phasor(params, 0.0, 0.0) == (0j, 0j)


def test_phasor_full_density_magnitudes(params):
    u = bridge_fundamental(50.0, 1.0)
    i1, i2 = steady_state_phasor(params, u, u)
    assert abs(i2) == pytest.approx(7.15, rel=0.02)
    assert abs(i1) == pytest.approx(7.33, rel=0.02)

    # Both loop equations hold with the sink in phase with I2.
    z1, z2 = params.tank_impedances()
    xm = 1j * params.mutual_reactance
    assert z1 * i1 + xm * i2 == pytest.approx(u, abs=1e-9)
    assert xm * i1 + z2 * i2 == pytest.approx(-u * i2 / abs(i2), abs=1e-9)


def test_phasor_below_conduction_threshold(params):
    i1, i2 = steady_state_phasor(params, 1.0, 500.0)
    assert i2 == 0
    assert i1 == pytest.approx(1.0 / params.tank_impedances()[0])


def test_simulate_requires_enough_bits(params):
    with pytest.raises(ValueError, match="half cycles"):
        simulate(params, ONES[:10], ONES, SimConfig(duration_periods=20,
                                                    transient_discard_periods=0))


def test_trace_shapes_and_time_axis(params):
    sim = SimConfig(duration_periods=10, transient_discard_periods=0)
    trace = simulate(params, ONES, ONES, sim)
    n = 10 * sim.steps_per_period
    for name in ("time", "i1", "i2", "vc1", "vc2", "u1", "u2", "c2"):
        assert getattr(trace, name).size == n
    assert np.diff(trace.time) == pytest.approx(np.full(n - 1, 1 / (300e3 * 512)))
    assert set(np.unique(trace.u1)) <= {-50.0, 50.0}
    assert set(np.abs(np.unique(trace.u2))) <= {0.0, 50.0}


def test_all_ones_matches_phasor_oracle(params):
    sim = SimConfig(duration_periods=1200, transient_discard_periods=200)
    trace = simulate(params, ONES, ONES, sim)
    tail = slice(-200 * sim.steps_per_period, None)
    u = bridge_fundamental(50.0, 1.0)
    i1, i2 = steady_state_phasor(params, u, u)
    assert fundamental_amplitude(trace.i1[tail], trace.sample_rate, params.fs) == \
        pytest.approx(abs(i1), rel=0.02)
    assert fundamental_amplitude(trace.i2[tail], trace.sample_rate, params.fs) == \
        pytest.approx(abs(i2), rel=0.02)


def test_warm_start_is_already_steady(params):
    sim = SimConfig(duration_periods=100, transient_discard_periods=0)
    trace = simulate(params, ONES, ONES, sim, initial_state=phasor_initial_state(params))
    env = envelope(trace.i2, trace.sample_rate, params.fs)
    assert env[1] == pytest.approx(env[-1], rel=0.05)
    assert trace.c2[0] == np.sign(trace.i2[1])


def test_skipped_pulses_decay(params):
    sim = SimConfig(duration_periods=300, transient_discard_periods=0)
    trace = simulate(params, ZEROS, ZEROS, sim, initial_state=phasor_initial_state(params))
    starts = np.arange(0, trace.time.size, sim.steps_per_period)
    energy = np.array([stored_energy(trace, params, k) for k in starts])
    assert np.all(np.diff(energy) <= 0.0)
    assert energy[-1] < 0.5 * energy[0]


def test_power_balance(params):
    sim = SimConfig(duration_periods=300, transient_discard_periods=0)
    trace = simulate(params, ONES, ONES, sim, initial_state=phasor_initial_state(params))
    balance = power_balance(trace, params)
    assert balance.input_power > 0
    assert balance.output_power > 0
    assert balance.relative_error < 0.01


def test_determinism(params):
    sim = SimConfig(duration_periods=50, transient_discard_periods=0)
    a = simulate(params, ONES, ONES, sim)
    b = simulate(params, ONES, ONES, sim)
    assert np.array_equal(a.i1, b.i1)
    assert np.array_equal(a.i2, b.i2)
    assert np.array_equal(a.c2, b.c2)


def test_step_halving_converges(params):
    x0 = phasor_initial_state(params)
    means = []
    for spp in (512, 1024):
        sim = SimConfig(steps_per_period=spp, duration_periods=200, transient_discard_periods=0)
        trace = simulate(params, ONES, ONES, sim, initial_state=x0)
        means.append(envelope(trace.i2, trace.sample_rate, params.fs)[100:].mean())
    assert means[0] == pytest.approx(means[1], rel=0.005)


def test_divergence_is_reported(params):
    sim = SimConfig(duration_periods=10, transient_discard_periods=0)
    with pytest.raises(SimulationDivergedError, match="step 0"):
        simulate(params, ONES, ONES, sim, initial_state=[2e6, 0.0, 0.0, 0.0])


def test_primary_envelope_scales_drive(params):
    sim = SimConfig(duration_periods=10, transient_discard_periods=0)
    n = 10 * sim.steps_per_period
    trace = simulate(params, ONES, ONES, sim, primary_envelope=np.full(n, 0.5))
    assert np.max(np.abs(trace.u1)) == pytest.approx(25.0)
    with pytest.raises(ValueError):
        simulate(params, ONES, ONES, sim, primary_envelope=np.ones(n - 1))
