"""Projective logarithmic potential theory on complex projective space."""
__version__ = "0.1.0"
