"""Geometrical SDEs on matrix Lie groups and their symmetries."""

__version__ = "0.1.0"
