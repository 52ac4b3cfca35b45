"""Time-domain model of the SS-compensated wireless power link.

State vector is (i1, i2, vc1, vc2). The primary bridge voltage u1 is fixed by
the primary bit stream; the secondary voltage u2 = Vo * c2 * bit is decided
online from i2, so the rectifier and the integrator share one kernel.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from gating import GateSchedule, SyncPulseConfig, comparator_step, synthesize_bridge_wave

logger = logging.getLogger(__name__)

_CURRENT_LIMIT = 1e6
_VOLTAGE_LIMIT = 1e9


class SimulationDivergedError(RuntimeError):
    """Raised when the integrated state stops being finite or bounded."""


@dataclass(frozen=True)
class CircuitParams:
    """Coil, capacitor and source values. Defaults are the 300 kHz prototype."""
    L1: float = 31.7e-6
    L2: float = 29.7e-6
    C1: float = 8.87e-9
    C2: float = 9.47e-9
    R1: float = 105e-3
    R2: float = 102e-3
    k: float = 0.152
    Vg: float = 50.0
    Vo: float = 50.0
    fs: float = 300e3

    def __post_init__(self):
        self.validate()

    def validate(self):
        for name in ("L1", "L2", "C1", "C2", "R1", "R2", "Vg", "Vo", "fs"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise ValueError(f"{name} must be positive, got {value}")
        # k = 0 is allowed for decoupled-coil checks; k >= 1 makes the inductance matrix singular.
        if not 0.0 <= self.k < 1.0:
            raise ValueError(f"coupling k must satisfy 0 <= k < 1, got {self.k}")

    @property
    def M(self) -> float:
        return self.k * np.sqrt(self.L1 * self.L2)

    @property
    def omega_s(self) -> float:
        return 2.0 * np.pi * self.fs

    @property
    def mutual_reactance(self) -> float:
        return self.omega_s * self.M

    @property
    def primary_resonance(self) -> float:
        return 1.0 / (2.0 * np.pi * np.sqrt(self.L1 * self.C1))

    @property
    def secondary_resonance(self) -> float:
        return 1.0 / (2.0 * np.pi * np.sqrt(self.L2 * self.C2))

    @property
    def envelope_time_constant(self) -> float:
        """Decay time (s) of the slow beat between the tanks, 2L/R of the slower tank."""
        return max(2.0 * self.L1 / self.R1, 2.0 * self.L2 / self.R2)

    def settle_periods(self, time_constants: float = 5.0) -> int:
        """Switching periods for a start-up disturbance of the beat to fall below e^-n."""
        return int(np.ceil(time_constants * self.envelope_time_constant * self.fs))

    def is_fully_resonant(self, tolerance: float = 0.02) -> bool:
        return all(abs(f / self.fs - 1.0) <= tolerance
                   for f in (self.primary_resonance, self.secondary_resonance))

    def tank_impedances(self):
        """(Z1, Z2) of the series tanks at the switching frequency."""
        w = self.omega_s
        z1 = self.R1 + 1j * (w * self.L1 - 1.0 / (w * self.C1))
        z2 = self.R2 + 1j * (w * self.L2 - 1.0 / (w * self.C2))
        return z1, z2


@dataclass(frozen=True)
class SimConfig:
    steps_per_period: int = 512
    duration_periods: int = 1200
    transient_discard_periods: int = 200

    def __post_init__(self):
        if self.steps_per_period < 64 or self.steps_per_period % 2:
            raise ValueError("steps_per_period must be an even integer >= 64")
        if self.duration_periods <= 0:
            raise ValueError("duration_periods must be positive")
        if not 0 <= self.transient_discard_periods < self.duration_periods:
            raise ValueError("transient_discard_periods must be shorter than the run")


@dataclass(frozen=True, eq=False)
class TraceSet:
    time: np.ndarray
    i1: np.ndarray
    i2: np.ndarray
    vc1: np.ndarray
    vc2: np.ndarray
    u1: np.ndarray
    u2: np.ndarray
    c2: np.ndarray
    sample_rate: float = field(default=0.0)

    def __post_init__(self):
        n = self.time.size
        for name in ("i1", "i2", "vc1", "vc2", "u1", "u2", "c2"):
            if getattr(self, name).size != n:
                raise ValueError(f"trace '{name}' length differs from time axis")


@dataclass(frozen=True)
class PowerBalance:
    input_power: float
    output_power: float
    resistive_loss: float
    stored_energy_rate: float

    @property
    def relative_error(self) -> float:
        residual = (self.input_power - self.output_power - self.resistive_loss
                    - self.stored_energy_rate)
        return abs(residual) / abs(self.input_power)


@njit(cache=True, nogil=True)
def _derivative(i1, i2, v1, v2, u1, u2, l1, l2, m, det, r1, r2, c1, c2):
    e1 = u1 - r1 * i1 - v1
    e2 = -u2 - r2 * i2 - v2
    return (l2 * e1 - m * e2) / det, (l1 * e2 - m * e1) / det, i1 / c1, i2 / c2


@njit(cache=True, nogil=True)
def _integrate(x0, u1, u2_scale, sec_bits, dt, l1, l2, m, r1, r2, c1, c2, vo, blank,
               polarity, out_x, out_u2, out_c2):
    det = l1 * l2 - m * m
    i1 = x0[0]
    i2 = x0[1]
    v1 = x0[2]
    v2 = x0[3]
    comparator = polarity
    last_toggle = -1e300
    toggles = 0
    last_bit = sec_bits.shape[0] - 1
    prev = i2
    h = dt
    for k in range(u1.shape[0]):
        polarity, comparator, last_toggle, toggled = comparator_step(
            prev, i2, k * dt, dt, polarity, comparator, last_toggle, blank)
        if toggled:
            toggles += 1
        bit = sec_bits[min(toggles, last_bit)]
        ua = u1[k]
        ub = vo * polarity * bit * u2_scale[k]

        out_x[k, 0] = i1
        out_x[k, 1] = i2
        out_x[k, 2] = v1
        out_x[k, 3] = v2
        out_u2[k] = ub
        out_c2[k] = polarity
        prev = i2

        a1, a2, a3, a4 = _derivative(i1, i2, v1, v2, ua, ub, l1, l2, m, det, r1, r2, c1, c2)
        b1, b2, b3, b4 = _derivative(i1 + 0.5 * h * a1, i2 + 0.5 * h * a2, v1 + 0.5 * h * a3,
                                     v2 + 0.5 * h * a4, ua, ub, l1, l2, m, det, r1, r2, c1, c2)
        g1, g2, g3, g4 = _derivative(i1 + 0.5 * h * b1, i2 + 0.5 * h * b2, v1 + 0.5 * h * b3,
                                     v2 + 0.5 * h * b4, ua, ub, l1, l2, m, det, r1, r2, c1, c2)
        q1, q2, q3, q4 = _derivative(i1 + h * g1, i2 + h * g2, v1 + h * g3, v2 + h * g4,
                                     ua, ub, l1, l2, m, det, r1, r2, c1, c2)
        i1 += h / 6.0 * (a1 + 2.0 * b1 + 2.0 * g1 + q1)
        i2 += h / 6.0 * (a2 + 2.0 * b2 + 2.0 * g2 + q2)
        v1 += h / 6.0 * (a3 + 2.0 * b3 + 2.0 * g3 + q3)
        v2 += h / 6.0 * (a4 + 2.0 * b4 + 2.0 * g4 + q4)

        # NaN fails every comparison, so this also catches non-finite states.
        if not (abs(i1) < _CURRENT_LIMIT and abs(i2) < _CURRENT_LIMIT
                and abs(v1) < _VOLTAGE_LIMIT and abs(v2) < _VOLTAGE_LIMIT):
            return k
    return -1


def _as_bits(bits, needed: int, name: str) -> np.ndarray:
    bits = np.ascontiguousarray(bits, dtype=np.int8)
    if bits.size < needed:
        raise ValueError(f"{name} covers {bits.size} half cycles, {needed} required")
    return bits


def simulate(params: CircuitParams, primary_bits, secondary_bits, sim: SimConfig = None, *,
             sync: SyncPulseConfig = None, initial_state=None, primary_envelope=None,
             secondary_envelope=None) -> TraceSet:
    """Integrate the link with fixed-step RK4, inputs held constant per step.

    primary_envelope / secondary_envelope optionally scale u1 / u2 sample by
    sample (used for amplitude-modulation probing).
    """
    sim = sim or SimConfig()
    sync = sync or SyncPulseConfig()
    n_half = 2 * sim.duration_periods
    primary_bits = _as_bits(primary_bits, n_half, "primary_bits")
    secondary_bits = _as_bits(secondary_bits, n_half, "secondary_bits")

    schedule = GateSchedule(primary_bits[:n_half], params.fs, params.Vg,
                            oversample=sim.steps_per_period // 2)
    u1 = synthesize_bridge_wave(schedule)
    n = u1.size
    if primary_envelope is not None:
        u1 = u1 * _envelope_samples(primary_envelope, n)
    u2_scale = (np.ones(n) if secondary_envelope is None
                else _envelope_samples(secondary_envelope, n))

    x0 = np.zeros(4) if initial_state is None else np.asarray(initial_state, dtype=float).copy()
    if x0.shape != (4,):
        raise ValueError("initial_state must be (i1, i2, vc1, vc2)")
    polarity = int(np.sign(x0[1])) if x0[1] != 0.0 else sync.initial_polarity

    dt = 1.0 / (params.fs * sim.steps_per_period)
    out_x = np.empty((n, 4))
    out_u2 = np.empty(n)
    out_c2 = np.empty(n, dtype=np.int8)
    status = _integrate(x0, np.ascontiguousarray(u1), u2_scale, secondary_bits, dt,
                        params.L1, params.L2, params.M, params.R1, params.R2,
                        params.C1, params.C2, params.Vo, sync.blanking_fraction / params.fs,
                        polarity, out_x, out_u2, out_c2)
    if status >= 0:
        raise SimulationDivergedError(
            f"state left bounds after step {status} (t = {status * dt:.6e} s): "
            f"i1={out_x[status, 0]:.4g} A, i2={out_x[status, 1]:.4g} A, "
            f"vc1={out_x[status, 2]:.4g} V, vc2={out_x[status, 3]:.4g} V")

    logger.debug("Simulated %d periods (%d steps)", sim.duration_periods, n)
    return TraceSet(time=np.arange(n) * dt, i1=out_x[:, 0].copy(), i2=out_x[:, 1].copy(),
                    vc1=out_x[:, 2].copy(), vc2=out_x[:, 3].copy(), u1=u1, u2=out_u2, c2=out_c2,
                    sample_rate=params.fs * sim.steps_per_period)


def _envelope_samples(envelope, n: int) -> np.ndarray:
    envelope = np.ascontiguousarray(envelope, dtype=np.float64)
    if envelope.shape != (n,):
        raise ValueError(f"envelope must have one value per sample ({n})")
    return envelope


def steady_state_phasor(params: CircuitParams, u1_amp: float, u2_amp: float):
    """First-harmonic steady state (I1, I2) with U1 as the real phase reference.

    The rectifier is a constant-amplitude sink in phase with I2. Below the
    conduction threshold |S| <= u2_amp the secondary carries no current.
    """
    z1, z2 = params.tank_impedances()
    xm = 1j * params.mutual_reactance
    u1 = complex(u1_amp)

    source = -xm * u1 / z1
    if abs(source) <= u2_amp:
        return u1 / z1, 0j

    zeq = z2 - xm * xm / z1
    a = abs(zeq) ** 2
    b = 2.0 * u2_amp * zeq.real
    c = u2_amp ** 2 - abs(source) ** 2
    magnitude = (-b + np.sqrt(b * b - 4.0 * a * c)) / (2.0 * a)
    direction = source / (magnitude * zeq + u2_amp)
    direction /= abs(direction)

    matrix = np.array([[z1, xm], [xm, z2]])
    rhs = np.array([u1, -u2_amp * direction])
    i1, i2 = np.linalg.solve(matrix, rhs)
    return complex(i1), complex(i2)


def bridge_fundamental(voltage: float, density: float) -> float:
    """Fundamental amplitude of a bridge at pulse density d."""
    return 4.0 * voltage * density / np.pi


def phasor_initial_state(params: CircuitParams, d1: float = 1.0, d2: float = 1.0) -> np.ndarray:
    """(i1, i2, vc1, vc2) at t = 0 on the steady-state orbit.

    The bridge starts with a positive half cycle, i.e. u1 ~ sin(w t), so every
    phasor is rotated by -j before taking the real part.
    """
    i1, i2 = steady_state_phasor(params, bridge_fundamental(params.Vg, d1),
                                 bridge_fundamental(params.Vo, d2))
    w = params.omega_s
    v1 = i1 / (1j * w * params.C1)
    v2 = i2 / (1j * w * params.C2)
    return np.array([(-1j * x).real for x in (i1, i2, v1, v2)])


def fundamental_amplitude(samples, sample_rate: float, frequency: float) -> float:
    """Lock-in estimate of the amplitude at `frequency` over whole periods."""
    samples = np.asarray(samples, dtype=float)
    per_period = sample_rate / frequency
    periods = int(samples.size // per_period)
    if periods < 1:
        raise ValueError("need at least one full period of samples")
    n = int(round(periods * per_period))
    t = np.arange(n) / sample_rate
    return float(2.0 * np.abs(np.mean(samples[:n] * np.exp(-2j * np.pi * frequency * t))))


def power_balance(trace: TraceSet, params: CircuitParams) -> PowerBalance:
    """Average power flows over the whole trace (trapezoidal within each step)."""
    i1_mid = 0.5 * (trace.i1[:-1] + trace.i1[1:])
    i2_mid = 0.5 * (trace.i2[:-1] + trace.i2[1:])
    p_in = float(np.mean(trace.u1[:-1] * i1_mid))
    p_out = float(np.mean(trace.u2[:-1] * i2_mid))
    loss = float(np.mean(0.5 * params.R1 * (trace.i1[:-1] ** 2 + trace.i1[1:] ** 2)
                         + 0.5 * params.R2 * (trace.i2[:-1] ** 2 + trace.i2[1:] ** 2)))

    def energy(k):
        return 0.5 * (params.L1 * trace.i1[k] ** 2 + params.L2 * trace.i2[k] ** 2
                      + 2.0 * params.M * trace.i1[k] * trace.i2[k]
                      + params.C1 * trace.vc1[k] ** 2 + params.C2 * trace.vc2[k] ** 2)

    span = trace.time[-1] - trace.time[0]
    return PowerBalance(input_power=p_in, output_power=p_out, resistive_loss=loss,
                        stored_energy_rate=float((energy(-1) - energy(0)) / span))
