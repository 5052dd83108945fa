"""Detect global-reference leak patterns and simulate exhaustion attacks."""

__version__ = "0.1.0"
