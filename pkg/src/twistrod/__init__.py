"""Constant-twist rod model of continuum manipulators built from parallel actuators."""

__version__ = "0.1.0"
