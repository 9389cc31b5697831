"""Numerical laboratory for entire functions bounded on rotating half-planes."""

__version__ = "0.1.0"
