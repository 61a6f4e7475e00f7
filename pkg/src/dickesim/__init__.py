"""Open Dicke / Tavis-Cummings simulator for cavity-assisted Raman setups."""

__version__ = "0.1.0"
