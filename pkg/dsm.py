"""Noise transfer functions and the 1-bit pulse-density modulator.

The modulator runs once per half switching cycle. It is realized in
error-feedback form: the loop filter NTF(z) - 1 acts on past quantization
errors, so every output sample satisfies Y = D + NTF * E exactly.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy import signal

logger = logging.getLogger(__name__)

_ROOT_TOL = 1e-9


@dataclass(frozen=True)
class NtfSpec:
    """Rational NTF in zero/pole/gain form (z-plane, positive powers)."""
    zeros: tuple
    poles: tuple
    gain: float = 1.0
    order: int = field(init=False)

    def __post_init__(self):
        zeros = tuple(complex(z) for z in self.zeros)
        poles = tuple(complex(p) for p in self.poles)
        object.__setattr__(self, "zeros", zeros)
        object.__setattr__(self, "poles", poles)
        object.__setattr__(self, "order", len(poles))

        if len(zeros) != len(poles):
            raise ValueError("NTF must have as many zeros as poles (NTF(inf) = 1)")
        if self.gain != 1.0:
            raise ValueError(f"NTF gain must be 1 for a realizable loop filter, got {self.gain}")
        for name, roots in (("zeros", zeros), ("poles", poles)):
            if not _conjugate_closed(roots):
                raise ValueError(f"complex {name} must come in conjugate pairs")
        if any(abs(p) >= 1.0 for p in poles):
            raise ValueError("all NTF poles must lie strictly inside the unit circle")
        if abs(ntf_eval_z(self, 1.0)) > _ROOT_TOL:
            raise ValueError("NTF must vanish at z = 1 (DC rejection)")


@dataclass
class ModulatorState:
    """Runtime state of the error-feedback modulator.

    loop_filter_memory holds the last `order` errors followed by the last
    `order` loop-filter outputs, newest first.
    """
    ntf: NtfSpec
    loop_filter_memory: np.ndarray
    last_error: float = 0.0
    sample_index: int = 0
    # Quantizer threshold; anything but 1.0 is a test hook for the stability scan.
    threshold: float = 1.0
    _b_minus_a: np.ndarray = field(init=False, repr=False)
    _a: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        b, a = ntf_coefficients(self.ntf)
        self._b_minus_a = np.ascontiguousarray(b - a)
        self._a = np.ascontiguousarray(a)
        self.loop_filter_memory = np.ascontiguousarray(self.loop_filter_memory, dtype=np.float64)
        if self.loop_filter_memory.shape != (2 * self.ntf.order,):
            raise ValueError("loop_filter_memory must hold 2 * order values")

    @classmethod
    def initial(cls, ntf: NtfSpec, threshold: float = 1.0) -> "ModulatorState":
        return cls(ntf=ntf, loop_filter_memory=np.zeros(2 * ntf.order), threshold=threshold)

    def _histories(self):
        order = self.ntf.order
        return self.loop_filter_memory[:order], self.loop_filter_memory[order:]


@dataclass
class StabilityReport:
    d_grid: np.ndarray
    max_error: float
    min_error: float
    violations: list = field(default_factory=list)  # (d, sample_index, error_value)

    @property
    def stable(self) -> bool:
        return not self.violations


def _conjugate_closed(roots) -> bool:
    for r in roots:
        if abs(r.imag) <= _ROOT_TOL:
            continue
        if not any(abs(r.conjugate() - s) <= _ROOT_TOL for s in roots):
            return False
    return True


def ntf_first_order() -> NtfSpec:
    """NTF1(z) = 1 - z^-1, the plain first-order difference block."""
    return NtfSpec(zeros=(1.0,), poles=(0.0,))


def ntf_notch(omega_ratio: float, pole_radius: float = 0.9) -> NtfSpec:
    """Third-order NTF with a DC zero and a unit-circle zero pair at omega_ratio.

    omega_ratio is w_e / w_s. The modulator samples twice per switching
    period, so the notch sits at angle pi * omega_ratio.
    """
    if not 0.0 < omega_ratio < 1.0:
        raise ValueError(f"omega_ratio must lie in (0, 1), got {omega_ratio}")
    if not 0.0 < pole_radius < 1.0:
        raise ValueError(f"pole_radius must lie in (0, 1) for a stable NTF, got {pole_radius}")

    angle = np.pi * omega_ratio
    notch = np.exp(1j * angle)
    return NtfSpec(
        zeros=(1.0, notch, notch.conjugate()),
        poles=(pole_radius, pole_radius * notch, pole_radius * notch.conjugate()),
    )


def ntf_eval_z(ntf: NtfSpec, z):
    """Evaluate NTF at arbitrary complex z (scalar or array)."""
    z = np.asarray(z, dtype=complex)
    num = np.ones_like(z)
    den = np.ones_like(z)
    for zero in ntf.zeros:
        num = num * (z - zero)
    for pole in ntf.poles:
        den = den * (z - pole)
    result = ntf.gain * num / den
    return result[()] if result.ndim == 0 else result


def ntf_eval(ntf: NtfSpec, theta):
    """NTF(e^{j theta}). A frequency w maps to theta = pi * w / w_s."""
    theta = np.asarray(theta, dtype=float)
    if not np.all(np.isfinite(theta)):
        raise ValueError("theta must be finite")
    return ntf_eval_z(ntf, np.exp(1j * theta))


def ntf_coefficients(ntf: NtfSpec):
    """Expanded (numerator, denominator) coefficients, highest power first."""
    b = ntf.gain * np.real(np.poly(ntf.zeros)) if ntf.zeros else np.array([ntf.gain])
    a = np.real(np.poly(ntf.poles)) if ntf.poles else np.array([1.0])
    return np.atleast_1d(b).astype(float), np.atleast_1d(a).astype(float)


def ntf_impulse_response(ntf: NtfSpec, length: int) -> np.ndarray:
    b, a = ntf_coefficients(ntf)
    return signal.lfilter(b, a, signal.unit_impulse(length))


def ntf_bode(ntf: NtfSpec, n_points: int = 1024):
    """Magnitude (dB) and phase (deg) over w / w_s in [0, 1]."""
    omega_ratio = np.linspace(0.0, 1.0, n_points)
    response = ntf_eval(ntf, np.pi * omega_ratio)
    magnitude_db = 20.0 * np.log10(np.maximum(np.abs(response), 1e-15))
    phase_deg = np.degrees(np.angle(response))
    return omega_ratio, magnitude_db, phase_deg


def density_error_bound(ntf: NtfSpec, n_samples: int) -> float:
    """Bound on |mean(bits) - d| after n_samples for constant d.

    Writing NTF = (1 - z^-1) G, the bit sum exceeds n*d by a convolution of
    the errors (in [-1, 0]) with g, so |mean - d| <= ||g||_1 / n.
    """
    b, a = ntf_coefficients(ntf)
    g_num, _ = np.polydiv(b, np.array([1.0, -1.0]))
    radius = max((abs(p) for p in ntf.poles), default=0.0)
    length = 64 if radius == 0.0 else int(np.ceil(np.log(1e-16) / np.log(radius))) + 64
    g = signal.lfilter(g_num, a, signal.unit_impulse(length))
    return float(np.sum(np.abs(g))) / n_samples


@njit(cache=True, nogil=True)
def _modulate(d, b_minus_a, a, threshold, err_hist, filt_hist, bits, errors):
    order = err_hist.shape[0]
    for n in range(d.shape[0]):
        f = 0.0
        for k in range(order):
            f += b_minus_a[k + 1] * err_hist[k] - a[k + 1] * filt_hist[k]
        v = d[n] + f
        y = 1 if v >= threshold else 0
        e = y - v
        for k in range(order - 1, 0, -1):
            err_hist[k] = err_hist[k - 1]
            filt_hist[k] = filt_hist[k - 1]
        if order > 0:
            err_hist[0] = e
            filt_hist[0] = f
        bits[n] = y
        errors[n] = e


def _check_density(d):
    if np.any(d < 0.0) or np.any(d > 1.0) or not np.all(np.isfinite(d)):
        raise ValueError("pulse density must lie in [0, 1]")


def modulator_step(state: ModulatorState, d: float) -> int:
    """Advance the modulator by one half switching cycle and return the bit."""
    d_arr = np.array([float(d)])
    _check_density(d_arr)
    bits = np.empty(1, dtype=np.int8)
    errors = np.empty(1)
    err_hist, filt_hist = state._histories()
    _modulate(d_arr, state._b_minus_a, state._a, state.threshold, err_hist, filt_hist, bits, errors)
    state.last_error = float(errors[0])
    state.sample_index += 1
    return int(bits[0])


def modulator_run(ntf: NtfSpec, d_sequence, threshold: float = 1.0):
    """Stream the modulator over d_sequence from a zero state.

    Returns (bits, error_trace).
    """
    d = np.ascontiguousarray(d_sequence, dtype=np.float64)
    _check_density(d)
    state = ModulatorState.initial(ntf, threshold=threshold)
    bits = np.empty(d.size, dtype=np.int8)
    errors = np.empty(d.size)
    err_hist, filt_hist = state._histories()
    _modulate(d, state._b_minus_a, state._a, threshold, err_hist, filt_hist, bits, errors)
    return bits, errors


def stability_scan(ntf: NtfSpec, d_grid, horizon: int, eps: float = 1e-9,
                   threshold: float = 1.0, max_violations_per_point: int = 16) -> StabilityReport:
    """Run the modulator at each constant density and check e stays in [-1, 0]."""
    d_grid = np.asarray(d_grid, dtype=float)
    if horizon < 10_000:
        logger.warning("Stability scan horizon %d is shorter than the recommended 10^4", horizon)

    max_error = -np.inf
    min_error = np.inf
    violations = []
    for d in d_grid:
        _, errors = modulator_run(ntf, np.full(horizon, d), threshold=threshold)
        max_error = max(max_error, float(errors.max()))
        min_error = min(min_error, float(errors.min()))
        bad = np.flatnonzero((errors < -1.0 - eps) | (errors > eps))
        for idx in bad[:max_violations_per_point]:
            violations.append((float(d), int(idx), float(errors[idx])))
        if bad.size:
            logger.debug("d = %.4f: %d samples outside [-1, 0]", d, bad.size)

    logger.info("Stability scan over %d densities: error range [%.6f, %.6f], %d violations",
                d_grid.size, min_error, max_error, len(violations))
    return StabilityReport(d_grid=d_grid, max_error=max_error, min_error=min_error,
                           violations=violations)
