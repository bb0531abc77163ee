"""Holonomy of parametrized quantum systems: M(C) = W(C) B(C)."""

__version__ = "0.1.0"
