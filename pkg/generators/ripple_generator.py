#!/usr/bin/env python3
from generators.csv_generator import CsvSchema, generate_csv

RIPPLE_SCHEMA = CsvSchema("ripple_sweep", 1, (
    ("d", ""), ("ripple_i1", "%"), ("ripple_i2", "%"), ("env_mean_i1", "A"), ("env_mean_i2", "A")))
DEVIATION_SUMMARY_SCHEMA = CsvSchema("deviation_summary", 1, (
    ("notch_ratio", "w/ws"), ("ripple_i2_at_0963", "%"), ("max_ripple_i2", "%"),
    ("max_ripple_i1", "%")))
NTF_SUMMARY_SCHEMA = CsvSchema("ntf_compare_summary", 1, (
    ("ntf", ""), ("fundamental", "V"), ("band_power", ""), ("notch_depth", "dB")))
TRACKING_SUMMARY_SCHEMA = CsvSchema("tracking_summary", 1, (
    ("ntf", ""), ("xcorr_i1_d2", ""), ("xcorr_i2_d2", ""), ("rms_excursion_i1", "A")))


def generate_ripple_sweep(out_dir, filename, rows):
    """rows: (d, ripple_i1, ripple_i2, env_mean_i1, env_mean_i2), sorted by d."""
    return generate_csv(out_dir, filename, RIPPLE_SCHEMA, sorted(rows))


def generate_deviation_summary(out_dir, filename, rows):
    return generate_csv(out_dir, filename, DEVIATION_SUMMARY_SCHEMA, sorted(rows))


def generate_ntf_summary(out_dir, filename, rows):
    return generate_csv(out_dir, filename, NTF_SUMMARY_SCHEMA, rows)


def generate_tracking_summary(out_dir, filename, rows):
    return generate_csv(out_dir, filename, TRACKING_SUMMARY_SCHEMA, rows)
