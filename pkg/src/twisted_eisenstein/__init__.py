"""Modular symbols, period cocycles and Eisenstein series twisted by modular symbols."""

__version__ = "0.1.0"
