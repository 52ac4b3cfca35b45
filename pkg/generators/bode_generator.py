#!/usr/bin/env python3
from generators.csv_generator import CsvSchema, generate_csv

GSSA_BODE_SCHEMA = CsvSchema("gssa_bode", 1, (
    ("omega", "rad/s"), ("omega_norm", "w/ws"), ("magnitude", "dB"), ("phase", "deg")))
PEAK_SCHEMA = CsvSchema("gssa_peaks", 1, (
    ("input_side", ""), ("output", ""), ("omega0_norm", "w/ws"), ("half_k", ""),
    ("peak_gain", "dB")))


def generate_gssa_bode(out_dir, filename, bode, omega_s):
    rows = zip(bode.freq, bode.freq / omega_s, bode.magnitude, bode.phase)
    return generate_csv(out_dir, filename, GSSA_BODE_SCHEMA, rows)


def generate_peak_table(out_dir, filename, rows):
    """rows: (input_side, output, omega0 / ws, k / 2, peak dB)."""
    return generate_csv(out_dir, filename, PEAK_SCHEMA, rows)
