"""Envelope, ripple and spectral measurements on simulated or synthetic traces."""
import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import signal

logger = logging.getLogger(__name__)

MIN_SAMPLES_PER_CYCLE = 64
MIN_RIPPLE_CYCLES = 500
MIN_SPECTRUM_CYCLES = 1024

# scipy.signal window names
_WINDOWS = {"flattop": "flattop", "rect": "boxcar"}


class DegenerateEnvelopeError(ValueError):
    """Envelope max + min is zero, so ripple is undefined."""


@dataclass(frozen=True)
class WindowInfo:
    name: str
    coherent_gain: float
    enbw_bins: float


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Single-sided amplitude spectrum; a sinusoid of amplitude A on a bin reads A."""
    freq: np.ndarray
    magnitude: np.ndarray
    resolution_bw: float
    window: WindowInfo
    n_samples: int
    windowed_mean_square: float

    def parseval_error(self) -> float:
        """Relative mismatch between summed line power and the windowed signal power."""
        mag = self.magnitude
        if self.n_samples % 2 == 0:
            power = mag[0] ** 2 + mag[-1] ** 2 + 0.5 * np.sum(mag[1:-1] ** 2)
        else:
            power = mag[0] ** 2 + 0.5 * np.sum(mag[1:] ** 2)
        power *= self.window.coherent_gain ** 2
        if self.windowed_mean_square == 0.0:
            return 0.0 if power == 0.0 else float("inf")
        return float(abs(power - self.windowed_mean_square) / self.windowed_mean_square)


@dataclass(frozen=True)
class RippleReport:
    ripple_percent: float
    env_max: float
    env_min: float
    env_mean: float
    window: tuple  # (start, end) in seconds; in cycles when fs_switch is not given


class Sidebands(NamedTuple):
    lower: float
    upper: float
    ratio: float


def _samples_per_cycle(fs_signal: float, fs_switch: float) -> int:
    ratio = fs_signal / fs_switch
    spc = int(round(ratio))
    if spc < 1 or abs(ratio - spc) > 1e-6 * ratio:
        raise ValueError("fs_signal must be an integer multiple of fs_switch")
    return spc


def envelope(trace, fs_signal: float, fs_switch: float) -> np.ndarray:
    """Per-switching-cycle peak of |trace|; trailing partial cycles are dropped."""
    trace = np.asarray(trace, dtype=float)
    spc = _samples_per_cycle(fs_signal, fs_switch)
    if spc < MIN_SAMPLES_PER_CYCLE:
        raise ValueError(f"need at least {MIN_SAMPLES_PER_CYCLE} samples per cycle, got {spc}")
    cycles = trace.size // spc
    if cycles == 0:
        raise ValueError("trace is shorter than one switching cycle")
    return np.abs(trace[: cycles * spc]).reshape(cycles, spc).max(axis=1)


def ripple(env, discard: int = 0, *, fs_switch: float = None,
           min_cycles: int = MIN_RIPPLE_CYCLES) -> RippleReport:
    """Envelope modulation depth 100 * (max - min) / (max + min)."""
    env = np.asarray(env, dtype=float)
    if discard < 0:
        raise ValueError("discard must be non-negative")
    window = env[discard:]
    if window.size < min_cycles:
        raise ValueError(f"ripple needs at least {min_cycles} cycles after discard, "
                         f"got {window.size}")
    env_max = float(window.max())
    env_min = float(window.min())
    if env_max + env_min == 0.0:
        raise DegenerateEnvelopeError("envelope max + min is zero")

    span = (discard, env.size)
    if fs_switch:
        span = (discard / fs_switch, env.size / fs_switch)
    return RippleReport(ripple_percent=100.0 * (env_max - env_min) / (env_max + env_min),
                        env_max=env_max, env_min=env_min, env_mean=float(window.mean()),
                        window=span)


def window_info(name: str, n: int):
    """(window samples, WindowInfo) for a named window."""
    if name not in _WINDOWS:
        raise ValueError(f"unknown window '{name}', expected one of {sorted(_WINDOWS)}")
    w = signal.get_window(_WINDOWS[name], n)
    cg = float(np.mean(w))
    enbw = float(n * np.sum(w ** 2) / np.sum(w) ** 2)
    return w, WindowInfo(name=name, coherent_gain=cg, enbw_bins=enbw)


def spectrum(samples, sample_rate: float, window_cycles: int = None, *, fs_switch: float = None,
             window: str = "flattop", time=None) -> Spectrum:
    """Amplitude spectrum of the last `window_cycles` switching cycles (or all samples)."""
    x = np.asarray(samples, dtype=float)
    if time is not None:
        steps = np.diff(np.asarray(time, dtype=float))
        if steps.size and not np.allclose(steps, 1.0 / sample_rate, rtol=1e-6, atol=0.0):
            raise ValueError("spectrum requires uniformly sampled input")

    if window_cycles is not None:
        if not fs_switch:
            raise ValueError("window_cycles needs fs_switch")
        n = int(round(window_cycles * sample_rate / fs_switch))
        if n > x.size:
            raise ValueError(f"window of {window_cycles} cycles exceeds the signal length")
        if window_cycles < MIN_SPECTRUM_CYCLES:
            logger.warning("Spectrum window of %d cycles is below the recommended %d",
                           window_cycles, MIN_SPECTRUM_CYCLES)
        x = x[-n:]
    n = x.size
    if n < 2:
        raise ValueError("spectrum needs at least two samples")

    w, info = window_info(window, n)
    xw = x * w
    mag = np.abs(np.fft.rfft(xw)) / (n * info.coherent_gain)
    if n % 2 == 0:
        mag[1:-1] *= 2.0
    else:
        mag[1:] *= 2.0
    return Spectrum(freq=np.fft.rfftfreq(n, 1.0 / sample_rate), magnitude=mag,
                    resolution_bw=info.enbw_bins * sample_rate / n, window=info, n_samples=n,
                    windowed_mean_square=float(np.mean(xw ** 2)))


def amplitude_spectrum(bits, fs_switch: float, window_cycles: int = None,
                       window: str = "rect") -> Spectrum:
    """Spectrum of the |a - b| amplitude sequence, one sample per half cycle."""
    return spectrum(np.asarray(bits, dtype=float), 2.0 * fs_switch, window_cycles,
                    fs_switch=fs_switch, window=window)


def line_magnitude(spec: Spectrum, frequency: float, search_width: float = None) -> float:
    """Largest magnitude within +-search_width of frequency."""
    width = 2.0 * spec.resolution_bw if search_width is None else search_width
    mask = np.abs(spec.freq - frequency) <= width
    if not np.any(mask):
        raise ValueError(f"no spectrum bins near {frequency} Hz")
    return float(spec.magnitude[mask].max())


def sideband_symmetry(spec: Spectrum, fs_switch: float, delta: float,
                      search_width: float = None) -> Sidebands:
    """Lines at fs - delta and fs + delta and their ratio lower / upper."""
    width = 2.0 * spec.resolution_bw if search_width is None else search_width
    if fs_switch - delta - width < 0.0 or fs_switch + delta + width > spec.freq[-1]:
        raise ValueError("sidebands fall outside the spectrum range")
    lower = line_magnitude(spec, fs_switch - delta, width)
    upper = line_magnitude(spec, fs_switch + delta, width)
    if upper == 0.0:
        ratio = float("nan") if lower == 0.0 else float("inf")
    else:
        ratio = lower / upper
    return Sidebands(lower=lower, upper=upper, ratio=ratio)


def band_power(spec: Spectrum, band) -> float:
    lo, hi = band
    mask = (spec.freq >= lo) & (spec.freq <= hi)
    return float(np.sum(spec.magnitude[mask] ** 2))


def notch_depth(spec_ref: Spectrum, spec_test: Spectrum, band) -> float:
    """Band power of spec_ref over spec_test, in dB."""
    if spec_ref.freq.shape != spec_test.freq.shape or not np.array_equal(spec_ref.freq, spec_test.freq):
        raise ValueError("notch_depth needs spectra on the same frequency grid")
    lo, hi = band
    if not 0.0 <= lo < hi:
        raise ValueError("band must satisfy 0 <= low < high")
    ref = band_power(spec_ref, band)
    test = band_power(spec_test, band)
    if test == 0.0:
        return float("inf") if ref > 0.0 else 0.0
    return float(10.0 * np.log10(ref / test))


def normalized_xcorr(a, b) -> float:
    """Zero-lag normalized cross-correlation (Pearson coefficient)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError("series must have equal length")
    return float(np.corrcoef(a, b)[0, 1])
