"""Certified quantum random number generation from the entropic uncertainty principle."""

__version__ = "0.1.0"
