"""Importance subsampling for capacity-expansion planning with long demand and wind records."""

__version__ = "0.1.0"
