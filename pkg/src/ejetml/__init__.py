"""Conductance-class prediction for e-jet printed electrodes."""

__version__ = "0.1.0"
