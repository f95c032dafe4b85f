"""Dyadic harmonic analysis on finite spaces of homogeneous type."""
