"""Secure multi-hop relay planning for space-air-ground-sea networks."""

__version__ = "0.1.0"
