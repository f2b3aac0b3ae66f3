"""Polarization-insensitive quantum frequency conversion: channel models,
atom-photon source states, polarization tomography and entanglement metrics."""

__version__ = "0.1.0"
