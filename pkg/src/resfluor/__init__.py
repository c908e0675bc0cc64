"""Resonance fluorescence of a driven two-level atom coupled to a detuned
cavity and a semi-infinite waveguide."""

__version__ = "0.1.0"
