"""Named experiments: each writes versioned CSVs plus a manifest and returns an exit code."""
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from analysis import (DegenerateEnvelopeError, amplitude_spectrum, band_power, envelope,
                      line_magnitude, normalized_xcorr, notch_depth, ripple, spectrum)
from config_manager import DProfile, ExperimentConfig
from dsm import NtfSpec, ntf_bode, ntf_first_order, ntf_notch, modulator_run
from gating import GateSchedule, synthesize_bridge_wave
from generators import (generate_deviation_summary, generate_envelope_tracking,
                        generate_gssa_bode, generate_manifest, generate_modulator_trace,
                        generate_ntf_bode, generate_ntf_summary, generate_peak_table,
                        generate_pole_zero, generate_ripple_sweep, generate_spectrum,
                        generate_tracking_summary, generate_waveform)
from gssa import (INPUT_SIDES, OUTPUT_CURRENTS, NoInteriorPeakError, OperatingPointError,
                  build_gssa, find_peak, gssa_bode, peak_search_grid)
from plant import (CircuitParams, SimConfig, SimulationDivergedError, bridge_fundamental,
                   phasor_initial_state, simulate, steady_state_phasor)
from sweep_worker import run_sweep
from utils import ensure_out_dir

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_USAGE = 2
EXIT_DIVERGED = 3
EXIT_NUMERICAL = 4

DEFAULT_SWEEP = DProfile("sweep", (0.203, 1.0, 0.02))
DEFAULT_TRACKING = DProfile("sinusoid", (0.5, 0.5, 500.0))
DEVIATION_RATIOS = (0.065, 0.085)
DEVIATION_POINT = 0.963
SPECTRUM_HALF_CYCLES = 2 ** 16
TRACKING_VOLTAGE = 15.0
NOTCH_BAND = (0.06, 0.09)  # x fs
ERROR_EPS = 1e-9
# Extra secondary bits beyond 2 per period; the rectifier may toggle early during start-up.
_BIT_MARGIN = 64
# Half cycles the modulator runs at the starting density before its bits are used.
MODULATOR_PREROLL = 2048


@dataclass
class ExperimentResult:
    written: list = field(default_factory=list)
    violations: list = field(default_factory=list)


@dataclass(frozen=True)
class RippleRow:
    d: float
    ripple_i1: float
    ripple_i2: float
    env_mean_i1: float
    env_mean_i2: float

    def as_row(self):
        return (self.d, self.ripple_i1, self.ripple_i2, self.env_mean_i1, self.env_mean_i2)


def ntf_label(ntf: NtfSpec) -> str:
    if ntf.order == 1:
        return "ntf1"
    ratio = float(np.angle(max(ntf.zeros, key=lambda z: z.imag)) / np.pi)
    return f"ntf3_{ratio:.6g}"


def comparison_ntfs(cfg: ExperimentConfig):
    """NTF1 and the notch NTF at the configured (or k / 2) ratio."""
    return [ntf_first_order(), ntf_notch(cfg.design_notch_ratio, cfg.pole_radius)]


def density_bits(ntf: NtfSpec, d, count: int) -> np.ndarray:
    """Modulator bits for a constant density or a per-half-cycle density array.

    The loop filter first runs ``MODULATOR_PREROLL`` half cycles at the starting
    density so the bits handed to the plant carry no start-up transient.
    """
    d = np.broadcast_to(np.asarray(d, dtype=float), (count,))
    if np.all(d >= 1.0):
        return np.ones(count, dtype=np.int8)
    primed = np.concatenate((np.full(MODULATOR_PREROLL, d[0]), d))
    bits, _ = modulator_run(ntf, primed)
    return bits[MODULATOR_PREROLL:]


def run_link(params: CircuitParams, cfg: ExperimentConfig, side: str, ntf: NtfSpec, d,
             sim: SimConfig = None, warm_density: float = None):
    """Simulate with one side pulse-density modulated and the other at density 1."""
    sim = sim or cfg.sim
    count = 2 * sim.duration_periods + _BIT_MARGIN
    controlled = density_bits(ntf, d, count)
    ones = np.ones(count, dtype=np.int8)
    primary, secondary = (controlled, ones) if side == "primary" else (ones, controlled)
    d_mean = float(np.mean(d)) if warm_density is None else warm_density
    d1, d2 = (d_mean, 1.0) if side == "primary" else (1.0, d_mean)
    x0 = phasor_initial_state(params, max(d1, 1e-3), max(d2, 1e-3))
    return simulate(params, primary, secondary, sim, sync=cfg.sync, initial_state=x0)


def measure_ripple(params: CircuitParams, cfg: ExperimentConfig, side: str, ntf: NtfSpec,
                   d: float) -> RippleRow:
    """Envelope ripple of both currents at a constant density.

    The run is lengthened so the start-up beat has decayed for at least five
    envelope time constants before the configured measurement window starts.
    """
    discard = max(cfg.sim.transient_discard_periods, params.settle_periods())
    window = cfg.sim.duration_periods - cfg.sim.transient_discard_periods
    sim = replace(cfg.sim, duration_periods=discard + window, transient_discard_periods=discard)
    trace = run_link(params, cfg, side, ntf, d, sim=sim)
    reports = []
    for current in (trace.i1, trace.i2):
        env = envelope(current, trace.sample_rate, params.fs)
        try:
            reports.append(ripple(env, discard, fs_switch=params.fs))
        except DegenerateEnvelopeError:
            logger.warning("Envelope is zero at d = %.3f; ripple undefined", d)
            reports.append(None)
    values = [(r.ripple_percent, r.env_mean) if r else (float("nan"), 0.0) for r in reports]
    return RippleRow(d=float(d), ripple_i1=values[0][0], ripple_i2=values[1][0],
                     env_mean_i1=values[0][1], env_mean_i2=values[1][1])


def dynamic_response(cfg: ExperimentConfig, out_dir: Path) -> ExperimentResult:
    """Modulator bits and error trace for the configured density profile."""
    result = ExperimentResult()
    ntf = cfg.build_ntf()
    profile = cfg.d_profile
    fs = cfg.circuit.fs
    if profile.kind == "ramp":
        count = int(round(profile.params[2] * 2.0 * fs))
    elif profile.kind == "sweep":
        raise ValueError("dynamic-response needs a constant, sinusoid or ramp profile")
    else:
        count = 2 * cfg.sim.duration_periods
    d = profile.sample(np.arange(count) / (2.0 * fs))
    bits, errors = modulator_run(ntf, d)
    result.written.append(generate_modulator_trace(
        out_dir, f"dynamic_response_{ntf_label(ntf)}.csv", d, bits, errors, fs))

    outside = np.flatnonzero((errors < -1.0 - ERROR_EPS) | (errors > ERROR_EPS))
    if outside.size:
        result.violations.append(
            f"quantization error left [-1, 0] at {outside.size} samples (first n = {outside[0]})")
    logger.info("Dynamic response: %d samples, error range [%.6f, %.6f]",
                count, errors.min(), errors.max())
    return result


def ntf_compare(cfg: ExperimentConfig, out_dir: Path) -> ExperimentResult:
    """Bode, pole-zero, waveform and spectra of NTF1 against the notch NTF."""
    result = ExperimentResult()
    params = cfg.circuit
    fs = params.fs
    d = cfg.d_profile.params[0] if cfg.d_profile.kind == "constant" else DEVIATION_POINT
    band = (NOTCH_BAND[0] * fs, NOTCH_BAND[1] * fs)

    summaries = []
    reference = None
    for ntf in comparison_ntfs(cfg):
        label = ntf_label(ntf)
        result.written.append(generate_ntf_bode(out_dir, f"ntf_bode_{label}.csv", *ntf_bode(ntf)))
        result.written.append(generate_pole_zero(out_dir, f"pole_zero_{label}.csv", ntf))

        bits, _ = modulator_run(ntf, np.full(SPECTRUM_HALF_CYCLES, d))
        preview = GateSchedule(bits[:128], fs, params.Vg, oversample=16)
        wave = synthesize_bridge_wave(preview)
        result.written.append(generate_waveform(
            out_dir, f"waveform_{label}.csv", np.arange(wave.size) / preview.sample_rate, wave))

        schedule = GateSchedule(bits, fs, params.Vg, oversample=16)
        bridge_spec = spectrum(synthesize_bridge_wave(schedule), schedule.sample_rate, 4096,
                               fs_switch=fs, window="flattop")
        result.written.append(generate_spectrum(out_dir, f"spectrum_{label}.csv", bridge_spec, fs,
                                                max_freq=3.0 * fs))
        amp_spec = amplitude_spectrum(bits, fs, SPECTRUM_HALF_CYCLES // 2, window="rect")
        result.written.append(generate_spectrum(out_dir, f"amplitude_spectrum_{label}.csv",
                                                amp_spec, fs, max_freq=0.5 * fs))

        fundamental = line_magnitude(bridge_spec, fs)
        if reference is None:
            reference = (fundamental, amp_spec)
            depth = 0.0
        else:
            depth = notch_depth(reference[1], amp_spec, band)
            drift = abs(fundamental - reference[0]) / reference[0]
            if drift > 0.01:
                result.violations.append(
                    f"{label} fundamental differs from NTF1 by {100 * drift:.2f}%")
        summaries.append((label, fundamental, band_power(amp_spec, band), depth))
        logger.info("%s at d = %.3f: fundamental %.4f V, notch depth %.1f dB",
                    label, d, fundamental, depth)

    result.written.append(generate_ntf_summary(out_dir, "ntf_compare_summary.csv", summaries))
    return result


def _ripple_tasks(cfg, keys, ntfs, side, params=None):
    params = params or cfg.circuit

    def run_point(key):
        label, d = key
        return measure_ripple(params, cfg, side, ntfs[label], d)

    return run_sweep(keys, run_point, jobs=cfg.jobs, label="ripple")


def ripple_sweep(cfg: ExperimentConfig, out_dir: Path) -> ExperimentResult:
    """Envelope ripple over densities on the configured side, per NTF."""
    result = ExperimentResult()
    profile = cfg.d_profile if cfg.d_profile.kind == "sweep" else DEFAULT_SWEEP
    points = profile.points()
    ntfs = {ntf_label(ntf): ntf for ntf in comparison_ntfs(cfg)}
    rows = _ripple_tasks(cfg, [(label, float(d)) for label in ntfs for d in points], ntfs, cfg.side)

    for label in ntfs:
        table = [row.as_row() for (lbl, _), row in rows if lbl == label]
        result.written.append(generate_ripple_sweep(out_dir, f"ripple_sweep_{label}.csv", table))
        logger.info("%s on %s side: max ripple i1 %.1f%%, i2 %.1f%%", label, cfg.side,
                    np.nanmax([r[1] for r in table]), np.nanmax([r[2] for r in table]))
    return result


def deviation_study(cfg: ExperimentConfig, out_dir: Path) -> ExperimentResult:
    """Secondary-side ripple for notches placed off the resonant peak."""
    result = ExperimentResult()
    ratios = sorted({round(r, 6) for r in (*DEVIATION_RATIOS, cfg.design_notch_ratio)})
    ntfs, ratio_of = {}, {}
    for r in ratios:
        ntf = ntf_notch(r, cfg.pole_radius)
        ntfs[ntf_label(ntf)] = ntf
        ratio_of[ntf_label(ntf)] = r
    points = sorted(set(np.round(np.arange(0.90, 1.0 + 1e-9, 0.01), 10)) | {DEVIATION_POINT})
    rows = _ripple_tasks(cfg, [(label, float(d)) for label in ntfs for d in points], ntfs,
                         "secondary")

    summary = []
    for label, ratio in ratio_of.items():
        table = [row for (lbl, _), row in rows if lbl == label]
        result.written.append(generate_ripple_sweep(
            out_dir, f"deviation_{label}.csv", [row.as_row() for row in table]))
        at_point = next(row for row in table if abs(row.d - DEVIATION_POINT) < 1e-9)
        summary.append((ratio, at_point.ripple_i2, max(r.ripple_i2 for r in table),
                        max(r.ripple_i1 for r in table)))
        logger.info("Notch %g: ripple at d2 = %.3f is %.1f%%", ratio, DEVIATION_POINT,
                    at_point.ripple_i2)
    result.written.append(generate_deviation_summary(out_dir, "deviation_summary.csv", summary))
    return result


def sinusoid_tracking(cfg: ExperimentConfig, out_dir: Path) -> ExperimentResult:
    """Secondary density follows a sinusoid; compare current envelopes with the profile.

    With the primary at full drive the secondary current is almost independent
    of d2 while the primary current scales with it, so tracking is judged on i1.
    """
    result = ExperimentResult()
    params = replace(cfg.circuit, Vg=TRACKING_VOLTAGE, Vo=TRACKING_VOLTAGE)
    profile = cfg.d_profile if cfg.d_profile.kind == "sinusoid" else DEFAULT_TRACKING
    fs = params.fs
    discard = cfg.sim.transient_discard_periods
    track_periods = int(np.ceil(2.0 * fs / profile.params[2]))
    sim = replace(cfg.sim, duration_periods=discard + track_periods)
    count = 2 * sim.duration_periods + _BIT_MARGIN
    d_half = profile.sample(np.arange(count) / (2.0 * fs))

    cycles = np.arange(discard, sim.duration_periods)
    d_cycle = profile.sample((cycles + 0.5) / fs)
    u1_amp = bridge_fundamental(params.Vg, 1.0)
    predicted = np.array([abs(steady_state_phasor(params, u1_amp,
                                                  bridge_fundamental(params.Vo, d))[0])
                          for d in d_cycle])
    ntfs = {ntf_label(ntf): ntf for ntf in comparison_ntfs(cfg)}

    def run_point(label):
        trace = run_link(params, cfg, "secondary", ntfs[label], d_half, sim=sim,
                         warm_density=float(profile.sample(0.0)))
        env1 = envelope(trace.i1, trace.sample_rate, fs)[discard:]
        env2 = envelope(trace.i2, trace.sample_rate, fs)[discard:]
        return env1, env2

    summary = []
    for label, (env1, env2) in run_sweep(list(ntfs), run_point, jobs=cfg.jobs, label="tracking"):
        result.written.append(generate_envelope_tracking(
            out_dir, f"tracking_{label}.csv", cycles / fs, d_cycle, env1, env2, predicted))
        excursion = float(np.sqrt(np.mean((env1 - predicted) ** 2)))
        summary.append((label, normalized_xcorr(env1, d_cycle), normalized_xcorr(env2, d_cycle),
                        excursion))
        logger.info("%s tracking: xcorr(i1, d2) = %.3f, rms excursion %.3f A",
                    label, summary[-1][1], excursion)
    result.written.append(generate_tracking_summary(out_dir, "tracking_summary.csv", summary))
    return result


def gssa_bode_experiment(cfg: ExperimentConfig, out_dir: Path) -> ExperimentResult:
    """Small-signal bode plots of both inputs to both currents, with the peak table."""
    result = ExperimentResult()
    params = cfg.circuit
    grid = peak_search_grid(params)
    peaks = []
    for side in INPUT_SIDES:
        model = build_gssa(params, 1.0, 1.0, input_side=side)
        for output in OUTPUT_CURRENTS:
            bode = gssa_bode(model, grid, output)
            result.written.append(generate_gssa_bode(
                out_dir, f"gssa_bode_{side}_{output}.csv", bode, params.omega_s))
            try:
                omega0, gain = find_peak(bode)
            except NoInteriorPeakError:
                logger.warning("No interior peak for %s -> %s", side, output)
                continue
            peaks.append((side, output, omega0 / params.omega_s, 0.5 * params.k, gain))
    result.written.append(generate_peak_table(out_dir, "gssa_peaks.csv", peaks))

    d = cfg.d_profile.params[0] if cfg.d_profile.kind == "constant" else DEVIATION_POINT
    for ntf in comparison_ntfs(cfg):
        bits = density_bits(ntf, d, SPECTRUM_HALF_CYCLES)
        spec = amplitude_spectrum(bits, params.fs, SPECTRUM_HALF_CYCLES // 2, window="flattop")
        result.written.append(generate_spectrum(
            out_dir, f"amplitude_overlay_{ntf_label(ntf)}.csv", spec, params.fs,
            max_freq=0.5 * params.fs))
    return result


EXPERIMENTS = {
    "dynamic-response": dynamic_response,
    "ntf-compare": ntf_compare,
    "ripple-sweep": ripple_sweep,
    "deviation-study": deviation_study,
    "sinusoid-tracking": sinusoid_tracking,
    "gssa-bode": gssa_bode_experiment,
}


def run_experiment(name: str, cfg: ExperimentConfig, out_dir) -> int:
    """Run one named experiment and return its exit code."""
    runner = EXPERIMENTS.get(name)
    if runner is None:
        logger.error("Unknown experiment '%s'; choose from %s", name, ", ".join(EXPERIMENTS))
        return EXIT_USAGE
    try:
        out_dir = ensure_out_dir(out_dir)
    except OSError as e:
        logger.error("Cannot use output directory: %s", e)
        return EXIT_USAGE
    logger.info("Running %s into %s", name, out_dir)
    try:
        result = runner(cfg, out_dir)
    except SimulationDivergedError as e:
        logger.error("Simulation diverged: %s", e)
        return EXIT_DIVERGED
    except OperatingPointError as e:
        logger.error("%s: %s", name, e)
        return EXIT_NUMERICAL
    except ValueError as e:
        logger.error("%s: %s", name, e)
        return EXIT_USAGE

    generate_manifest(out_dir, result.written)
    for violation in result.violations:
        logger.warning("Invariant violation: %s", violation)
    return EXIT_VIOLATION if result.violations else EXIT_OK
