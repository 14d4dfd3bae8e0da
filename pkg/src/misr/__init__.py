"""Desk-scale machinery for maximum independent set of rectangles."""

__version__ = "0.1.0"
