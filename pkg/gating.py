"""Bridge voltage synthesis and secondary synchronous-rectifier pulses."""
import logging
from dataclasses import dataclass

import numpy as np
from numba import njit

logger = logging.getLogger(__name__)

MIN_OVERSAMPLE = 8
MIN_SYNC_SAMPLES_PER_PERIOD = 16


@dataclass(frozen=True, eq=False)
class GateSchedule:
    """One modulator bit per half switching cycle plus the bridge it drives."""
    bits: np.ndarray
    switching_frequency: float
    dc_voltage: float
    oversample: int = 64

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=np.int8)
        if bits.ndim != 1 or bits.size == 0:
            raise ValueError("bits must be a non-empty 1-D sequence")
        if np.any((bits != 0) & (bits != 1)):
            raise ValueError("bits must be 0 or 1")
        if self.oversample < MIN_OVERSAMPLE:
            raise ValueError(f"oversample must be >= {MIN_OVERSAMPLE}, got {self.oversample}")
        if self.switching_frequency <= 0:
            raise ValueError("switching_frequency must be positive")
        object.__setattr__(self, "bits", bits)

    @property
    def sample_rate(self) -> float:
        return 2.0 * self.switching_frequency * self.oversample


@dataclass(frozen=True)
class SyncPulseConfig:
    blanking_fraction: float = 0.25
    initial_polarity: int = 1

    def __post_init__(self):
        if not 0.0 <= self.blanking_fraction < 0.5:
            raise ValueError(f"blanking_fraction must lie in [0, 0.5), got {self.blanking_fraction}")
        if self.initial_polarity not in (-1, 1):
            raise ValueError("initial_polarity must be +1 or -1")


@dataclass(frozen=True, eq=False)
class SyncPulses:
    c2: np.ndarray
    toggle_times: np.ndarray
    degenerate: bool


def synthesize_bridge_wave(schedule: GateSchedule) -> np.ndarray:
    """Sampled bridge voltage a - b.

    Half cycle n carries polarity (-1)^n; a skipped pulse (bit 0) holds the
    bridge at zero volts for that half cycle.
    """
    bits = schedule.bits
    polarity = np.where(np.arange(bits.size) % 2 == 0, 1.0, -1.0)
    levels = schedule.dc_voltage * polarity * bits
    return np.repeat(levels, schedule.oversample)


@njit(cache=True, nogil=True)
def comparator_step(prev, cur, t_cur, dt, polarity, comparator, last_toggle, blank):
    """Advance the zero-crossing comparator by one sample.

    Returns (polarity, comparator, last_toggle, toggled). The output polarity
    follows the comparator level, but not before `blank` seconds have passed
    since the previous toggle. Crossings are located by linear interpolation.
    """
    level = comparator
    if cur > 0.0:
        level = 1
    elif cur < 0.0:
        level = -1

    toggled = False
    if level != polarity:
        t_event = t_cur
        if level != comparator and prev * cur < 0.0:
            t_event = t_cur - dt * cur / (cur - prev)
        if t_event - last_toggle >= blank:
            polarity = level
            last_toggle = t_event
            toggled = True
    return polarity, level, last_toggle, toggled


@njit(cache=True, nogil=True)
def _sync_kernel(current, dt, blank, polarity, out_c2, out_toggles):
    comparator = polarity
    last_toggle = -1e300
    count = 0
    prev = 0.0
    for k in range(current.shape[0]):
        cur = current[k]
        polarity, comparator, last_toggle, toggled = comparator_step(
            prev, cur, k * dt, dt, polarity, comparator, last_toggle, blank)
        if toggled:
            out_toggles[count] = last_toggle
            count += 1
        out_c2[k] = polarity
        prev = cur
    return count


def sync_pulses_from_current(current_samples, sample_rate: float, cfg: SyncPulseConfig,
                             switching_frequency: float) -> SyncPulses:
    """Offline c2 generation from a sampled secondary current."""
    current = np.ascontiguousarray(current_samples, dtype=np.float64)
    if sample_rate < MIN_SYNC_SAMPLES_PER_PERIOD * switching_frequency:
        raise ValueError(
            f"sample_rate must be at least {MIN_SYNC_SAMPLES_PER_PERIOD} x switching_frequency")

    c2 = np.empty(current.size, dtype=np.int8)
    toggles = np.empty(current.size)
    blank = cfg.blanking_fraction / switching_frequency
    count = _sync_kernel(current, 1.0 / sample_rate, blank, cfg.initial_polarity, c2, toggles)

    degenerate = not np.any(current != 0.0)
    if degenerate:
        logger.warning("Secondary current is identically zero; c2 held at %+d", cfg.initial_polarity)
    return SyncPulses(c2=c2, toggle_times=toggles[:count].copy(), degenerate=degenerate)
