# Generators package for pdm-lab
# One module per output family; every file goes through csv_generator so it carries a versioned header.

from .csv_generator import generate_csv, generate_manifest
from .trace_generator import generate_modulator_trace, generate_waveform, generate_envelope_tracking
from .spectrum_generator import generate_spectrum, generate_ntf_bode, generate_pole_zero
from .bode_generator import generate_gssa_bode, generate_peak_table
from .ripple_generator import (generate_ripple_sweep, generate_deviation_summary,
                               generate_ntf_summary, generate_tracking_summary)

__all__ = [
    'generate_csv', 'generate_manifest',
    'generate_modulator_trace', 'generate_waveform', 'generate_envelope_tracking',
    'generate_spectrum', 'generate_ntf_bode', 'generate_pole_zero',
    'generate_gssa_bode', 'generate_peak_table',
    'generate_ripple_sweep', 'generate_deviation_summary', 'generate_ntf_summary',
    'generate_tracking_summary',
]
