"""Desk-scale data federation (director, origins, pull-through caches) and a
solar filament detection pipeline that reads and writes through it."""

__version__ = "0.1.0"
