"""Simulation of remote state preparation of a qubit between two NMR spins."""

__version__ = "0.1.0"
