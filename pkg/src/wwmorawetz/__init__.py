"""Holomorphic-coordinate water wave simulator and Morawetz diagnostics."""

__version__ = "0.1.0"
