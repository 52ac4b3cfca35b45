"""First-harmonic dynamic-phasor model of the link and its small-signal bode plots.

Each state x(t) is represented by its fundamental phasor X with
x = Re(X e^{j w_s t}); in that rotating frame dX/dt = F(X) - j w_s X. The
eight real states are (Re, Im) of I1, I2, V1, V2, interleaved.
"""
import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg, optimize

from analysis import envelope
from plant import (CircuitParams, SimConfig, bridge_fundamental, phasor_initial_state,
                   simulate, steady_state_phasor)

logger = logging.getLogger(__name__)

INPUT_SIDES = ("primary", "secondary")
OUTPUT_CURRENTS = ("i1", "i2")
MIN_PEAK_GRID = 100

_REAL_PART = np.eye(2)
_IMAG_PART = np.array([[0.0, -1.0], [1.0, 0.0]])


class NoInteriorPeakError(ValueError):
    """Bode magnitude has its maximum at the edge of the frequency grid."""


class OperatingPointError(RuntimeError):
    """Root finding found no conducting steady state for the phasor model."""


@dataclass(frozen=True, eq=False)
class GssaModel:
    state_matrix: np.ndarray
    input_map: np.ndarray
    output_maps: dict
    operating_point: np.ndarray
    input_side: str
    params: CircuitParams
    d1: float
    d2: float

    def eigenvalues(self) -> np.ndarray:
        return linalg.eigvals(self.state_matrix)

    def is_stable(self) -> bool:
        return bool(np.all(self.eigenvalues().real < 0.0))

    def phasors(self):
        """Operating point as complex (I1, I2, V1, V2)."""
        op = self.operating_point
        return tuple(complex(op[2 * i], op[2 * i + 1]) for i in range(4))


@dataclass(frozen=True, eq=False)
class BodeData:
    freq: np.ndarray
    magnitude: np.ndarray
    phase: np.ndarray
    input_side: str
    output_current: str

    def __post_init__(self):
        if self.freq.size > 1 and np.any(np.diff(self.freq) <= 0.0):
            raise ValueError("bode frequencies must be strictly increasing")


def _realify(matrix: np.ndarray) -> np.ndarray:
    """Complex n x n operator as a real 2n x 2n operator on interleaved (Re, Im)."""
    return np.kron(matrix.real, _REAL_PART) + np.kron(matrix.imag, _IMAG_PART)


def _phasor_residual(x, params: CircuitParams, u1_amp: float, u2_amp: float):
    z1, z2 = params.tank_impedances()
    xm = 1j * params.mutual_reactance
    i1 = complex(x[0], x[1])
    i2 = complex(x[2], x[3])
    mag = abs(i2)
    u2 = u2_amp * i2 / mag if mag > 0.0 else 0j
    r1 = u1_amp - z1 * i1 - xm * i2
    r2 = -u2 - z2 * i2 - xm * i1
    return [r1.real, r1.imag, r2.real, r2.imag]


def solve_operating_point(params: CircuitParams, u1_amp: float, u2_amp: float):
    """Conducting steady state from a lossless seed, by nonlinear root finding."""
    xm = 1j * params.mutual_reactance
    if xm == 0:
        raise ValueError("coils are decoupled (k = 0); no conducting operating point")
    i2 = u1_amp / xm
    i1 = -u2_amp * (i2 / abs(i2)) / xm
    seeds = [(i1, i2)]
    # Heavily damped tanks sit far from the lossless seed; retry from the closed form.
    closed = steady_state_phasor(params, u1_amp, u2_amp)
    if abs(closed[1]) > 0.0:
        seeds.append(closed)

    message = ""
    for s1, s2 in seeds:
        x, _, ier, message = optimize.fsolve(_phasor_residual, [s1.real, s1.imag, s2.real, s2.imag],
                                             args=(params, u1_amp, u2_amp), full_output=True,
                                             xtol=1e-12)
        residual = np.max(np.abs(_phasor_residual(x, params, u1_amp, u2_amp)))
        if (ier == 1 or residual < 1e-9 * u1_amp) and np.hypot(x[2], x[3]) > 0.0:
            return complex(x[0], x[1]), complex(x[2], x[3])
        logger.debug("Operating point solve from seed %s failed: %s", (s1, s2), message)
    raise OperatingPointError(f"operating point solve did not converge: {message}")


def operating_point_residual(model: GssaModel) -> float:
    """Largest phasor-equation residual (volts) at the model's operating point."""
    i1, i2, _, _ = model.phasors()
    p = model.params
    residual = _phasor_residual([i1.real, i1.imag, i2.real, i2.imag], p,
                                bridge_fundamental(p.Vg, model.d1),
                                bridge_fundamental(p.Vo, model.d2))
    return float(np.max(np.abs(residual)))


def build_gssa(params: CircuitParams, d1: float, d2: float,
               input_side: str = "primary") -> GssaModel:
    """Linearize the phasor dynamics at densities (d1, d2).

    The rectifier is a constant-amplitude sink U2 = U2a * I2 / |I2|; its
    incremental action is a resistance U2a / |I2| on the I2 component
    perpendicular to the operating-point current, and zero along it.
    """
    if input_side not in INPUT_SIDES:
        raise ValueError(f"input_side must be one of {INPUT_SIDES}")
    for name, d in (("d1", d1), ("d2", d2)):
        if not 0.0 < d <= 1.0:
            raise ValueError(f"{name} must lie in (0, 1], got {d}")

    w = params.omega_s
    u1_amp = bridge_fundamental(params.Vg, d1)
    u2_amp = bridge_fundamental(params.Vo, d2)
    i1, i2 = solve_operating_point(params, u1_amp, u2_amp)
    if abs(i2) == 0.0:
        raise ValueError("secondary rectifier does not conduct at this operating point")

    l_inv = np.linalg.inv(np.array([[params.L1, params.M], [params.M, params.L2]]))
    ac = np.zeros((4, 4), dtype=complex)
    ac[:2, :2] = -l_inv @ np.diag([params.R1, params.R2]) - 1j * w * np.eye(2)
    ac[:2, 2:] = -l_inv
    ac[2, 0] = 1.0 / params.C1
    ac[3, 1] = 1.0 / params.C2
    ac[2, 2] = ac[3, 3] = -1j * w
    a = _realify(ac)

    n2 = np.array([i2.real, i2.imag]) / abs(i2)
    n1 = np.array([i1.real, i1.imag]) / abs(i1)
    sink = (u2_amp / abs(i2)) * (np.eye(2) - np.outer(n2, n2))
    a[0:2, 2:4] -= l_inv[0, 1] * sink
    a[2:4, 2:4] -= l_inv[1, 1] * sink

    b = np.zeros(8)
    if input_side == "primary":
        u_dir = np.array([1.0, 0.0])  # U1 is the phase reference
        b[0:2] = l_inv[0, 0] * u_dir
        b[2:4] = l_inv[1, 0] * u_dir
    else:
        b[0:2] = -l_inv[0, 1] * n2
        b[2:4] = -l_inv[1, 1] * n2

    c_i1 = np.zeros(8)
    c_i1[0:2] = n1
    c_i2 = np.zeros(8)
    c_i2[2:4] = n2

    v1 = i1 / (1j * w * params.C1)
    v2 = i2 / (1j * w * params.C2)
    op = np.array([part for x in (i1, i2, v1, v2) for part in (x.real, x.imag)])
    model = GssaModel(state_matrix=a, input_map=b, output_maps={"i1": c_i1, "i2": c_i2},
                      operating_point=op, input_side=input_side, params=params, d1=d1, d2=d2)
    if not model.is_stable():
        logger.warning("GSSA model at d1=%.3f d2=%.3f has eigenvalues in the right half plane",
                       d1, d2)
    return model


def transfer(model: GssaModel, freq, output: str = "i2") -> np.ndarray:
    """Complex small-signal gain (A per V of fundamental amplitude) at envelope frequencies."""
    if output not in OUTPUT_CURRENTS:
        raise ValueError(f"output must be one of {OUTPUT_CURRENTS}")
    c = model.output_maps[output]
    eye = np.eye(model.state_matrix.shape[0])
    freq = np.atleast_1d(np.asarray(freq, dtype=float))
    return np.array([c @ np.linalg.solve(1j * wd * eye - model.state_matrix, model.input_map)
                     for wd in freq])


def gssa_bode(model: GssaModel, freq_grid, output: str = "i2") -> BodeData:
    """Bode data of the voltage-amplitude to current-amplitude response."""
    freq = np.asarray(freq_grid, dtype=float)
    if freq.ndim != 1 or freq.size == 0 or np.any(freq <= 0.0):
        raise ValueError("freq_grid must be a non-empty array of positive frequencies")
    if np.any(np.diff(freq) <= 0.0):
        raise ValueError("freq_grid must be strictly increasing")
    response = transfer(model, freq, output)
    magnitude = 20.0 * np.log10(np.maximum(np.abs(response), 1e-300))
    phase = np.degrees(np.unwrap(np.angle(response)))
    return BodeData(freq=freq, magnitude=magnitude, phase=phase,
                    input_side=model.input_side, output_current=output)


def peak_search_grid(params: CircuitParams, n_points: int = 400) -> np.ndarray:
    """Envelope frequencies spanning 0.2 to 3 times k * w_s / 2."""
    if n_points < MIN_PEAK_GRID:
        raise ValueError(f"peak search needs at least {MIN_PEAK_GRID} points")
    if params.k <= 0.0:
        raise ValueError("peak search needs k > 0")
    return 0.5 * params.k * params.omega_s * np.linspace(0.2, 3.0, n_points)


def find_peak(bode: BodeData):
    """(omega0, peak_db) refined by a parabola through the top three points."""
    if bode.freq.size < MIN_PEAK_GRID:
        raise ValueError(f"find_peak needs at least {MIN_PEAK_GRID} grid points")
    i = int(np.argmax(bode.magnitude))
    if i == 0 or i == bode.freq.size - 1:
        raise NoInteriorPeakError("bode magnitude has no interior peak")
    offsets = bode.freq[i - 1:i + 2] - bode.freq[i]
    a, b, c = np.polyfit(offsets, bode.magnitude[i - 1:i + 2], 2)
    if a >= 0.0:
        return float(bode.freq[i]), float(bode.magnitude[i])
    vertex = -b / (2.0 * a)
    return float(bode.freq[i] + vertex), float(np.polyval([a, b, c], vertex))


def am_probe_gain(params: CircuitParams, delta_omega: float, *, side: str = "primary",
                  output: str = "i2", depth: float = 0.05, discard_periods: int = 600,
                  window_periods: int = 1500, steps_per_period: int = 512) -> float:
    """Time-domain gain |d(envelope)| / |d(fundamental amplitude)| at delta_omega.

    Both bridges run at density 1; one side's voltage is amplitude modulated by
    (1 + depth * cos(delta_omega * t)) and the per-cycle current envelope is
    locked in at delta_omega.
    """
    if side not in INPUT_SIDES or output not in OUTPUT_CURRENTS:
        raise ValueError("unknown probe side or output")
    sim = SimConfig(steps_per_period=steps_per_period,
                    duration_periods=discard_periods + window_periods,
                    transient_discard_periods=discard_periods)
    n = 2 * sim.duration_periods
    ones = np.ones(n + 64, dtype=np.int8)
    t = np.arange(sim.duration_periods * steps_per_period) / (params.fs * steps_per_period)
    modulation = 1.0 + depth * np.cos(delta_omega * t)
    kwargs = {"primary_envelope" if side == "primary" else "secondary_envelope": modulation}
    trace = simulate(params, ones, ones, sim, initial_state=phasor_initial_state(params), **kwargs)

    current = trace.i1 if output == "i1" else trace.i2
    env = envelope(current, trace.sample_rate, params.fs)[discard_periods:]
    # Lock in over a whole number of modulation periods.
    cycles_per_mod = params.omega_s / delta_omega
    usable = int(round(np.floor(env.size / cycles_per_mod) * cycles_per_mod))
    if usable < 1:
        raise ValueError("probe window shorter than one modulation period")
    cycle_time = (discard_periods + np.arange(usable)) / params.fs
    amplitude = 2.0 * np.abs(np.mean(env[:usable] * np.exp(-1j * delta_omega * cycle_time)))
    drive = depth * bridge_fundamental(params.Vg if side == "primary" else params.Vo, 1.0)
    return float(amplitude / drive)
