"""Translating, minimal and CMC graphs over warped-product surfaces."""

__version__ = "0.1.0"
