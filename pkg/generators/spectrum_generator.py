#!/usr/bin/env python3
import numpy as np

from generators.csv_generator import CsvSchema, generate_csv

SPECTRUM_SCHEMA = CsvSchema("spectrum", 1, (
    ("freq", "Hz"), ("freq_norm", "f/fs"), ("magnitude", "")))
NTF_BODE_SCHEMA = CsvSchema("ntf_bode", 1, (
    ("omega_norm", "w/ws"), ("magnitude", "dB"), ("phase", "deg")))
POLE_ZERO_SCHEMA = CsvSchema("pole_zero", 1, (("kind", ""), ("real", ""), ("imag", "")))


def generate_spectrum(out_dir, filename, spec, fs_switch, max_freq=None):
    """Magnitude is in the unit of the analysed signal (V, A, or density)."""
    keep = spec.freq <= max_freq if max_freq is not None else np.ones(spec.freq.size, bool)
    rows = zip(spec.freq[keep], spec.freq[keep] / fs_switch, spec.magnitude[keep])
    return generate_csv(out_dir, filename, SPECTRUM_SCHEMA, rows)


def generate_ntf_bode(out_dir, filename, omega_ratio, magnitude_db, phase_deg):
    return generate_csv(out_dir, filename, NTF_BODE_SCHEMA,
                        zip(omega_ratio, magnitude_db, phase_deg))


def generate_pole_zero(out_dir, filename, ntf):
    rows = [("zero", z.real, z.imag) for z in ntf.zeros]
    rows += [("pole", p.real, p.imag) for p in ntf.poles]
    return generate_csv(out_dir, filename, POLE_ZERO_SCHEMA, rows)
