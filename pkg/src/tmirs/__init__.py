"""OFDM directional modulation through a time-modulated intelligent reflecting surface."""

from .design import (
    DesignMode,
    DesignReport,
    design_enhanced,
    design_linear,
    design_planar,
    design_weights,
    theoretical_legit_gain,
    validate_schedule,
)
from .geometry import Direction, OfdmConfig, SystemGeometry, array_factor, transmit_gain
from .harmonics import (
    ScramblingOperator,
    TmGrid,
    TmSchedule,
    UnitTmParams,
    gate_fourier_coeff,
    harmonic_coeff,
    scramble,
    scrambling_operator,
)
from .link import BerEstimate, Equalizer, LinkConfig, qpsk_demodulate, qpsk_modulate, simulate_direction
from .oracle import demod_exact, demod_sampled

__all__ = [
    "BerEstimate", "DesignMode", "DesignReport", "Direction", "Equalizer", "LinkConfig",
    "OfdmConfig", "ScramblingOperator", "SystemGeometry", "TmGrid", "TmSchedule", "UnitTmParams",
    "array_factor", "demod_exact", "demod_sampled", "design_enhanced", "design_linear",
    "design_planar", "design_weights", "gate_fourier_coeff", "harmonic_coeff", "qpsk_demodulate",
    "qpsk_modulate", "scramble", "scrambling_operator", "simulate_direction",
    "theoretical_legit_gain", "transmit_gain", "validate_schedule",
]
