"""Measurement toolkit for child–adult dialogue transcripts."""
__version__ = "0.1.0"
