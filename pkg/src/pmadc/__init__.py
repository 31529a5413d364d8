"""Phase-modulation high-dynamic-range ADC simulation."""

__version__ = "0.1.0"
