"""Discrete-event quantum network simulator with a programmable match+action data plane."""

__version__ = "0.1.0"
