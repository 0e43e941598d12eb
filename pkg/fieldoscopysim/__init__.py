"""Simulation of field-resolved detection of weak light pulses."""

__version__ = '0.1.0'
