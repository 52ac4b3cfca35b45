#!/usr/bin/env python3
from generators.csv_generator import CsvSchema, generate_csv

MODULATOR_SCHEMA = CsvSchema("modulator_trace", 1, (
    ("n", ""), ("t", "s"), ("d", ""), ("y", ""), ("e", "")))
WAVEFORM_SCHEMA = CsvSchema("bridge_waveform", 1, (("t", "s"), ("u", "V")))
TRACKING_SCHEMA = CsvSchema("envelope_tracking", 1, (
    ("t", "s"), ("d2", ""), ("env_i1", "A"), ("env_i2", "A"), ("predicted_i1", "A")))


def generate_modulator_trace(out_dir, filename, d, bits, errors, fs_switch):
    """Bits and quantization error per half cycle."""
    half = 0.5 / fs_switch
    rows = ((n, n * half, d[n], int(bits[n]), errors[n]) for n in range(len(bits)))
    return generate_csv(out_dir, filename, MODULATOR_SCHEMA, rows)


def generate_waveform(out_dir, filename, time, volts):
    return generate_csv(out_dir, filename, WAVEFORM_SCHEMA, zip(time, volts))


def generate_envelope_tracking(out_dir, filename, time, d2, env_i1, env_i2, predicted_i1):
    return generate_csv(out_dir, filename, TRACKING_SCHEMA,
                        zip(time, d2, env_i1, env_i2, predicted_i1))
