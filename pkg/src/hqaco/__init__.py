"""Hybrid quantum ant colony optimization on a simulated ideal quantum computer."""

__version__ = "0.1.0"
