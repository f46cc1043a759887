"""Effective coefficients of high-contrast Norton-Hoff fiber composites."""

__version__ = "0.1.0"
