"""Turing-machine orbits as exact rational dynamical systems."""

__version__ = "0.1.0"
