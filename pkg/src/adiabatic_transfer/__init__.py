"""Adiabatic single-photon state transfer in waveguide networks."""

__version__ = "0.1.0"
