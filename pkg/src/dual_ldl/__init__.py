"""Dual label distribution learning for attractiveness score prediction."""

__version__ = "1.0.0"
