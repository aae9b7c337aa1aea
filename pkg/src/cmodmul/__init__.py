"""Controlled modular multiplication circuits with measurement-based uncomputation."""

__version__ = "0.1.0"
