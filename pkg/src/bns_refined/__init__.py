"""Refined Barndorff-Nielsen--Shephard model with a learned jump-regime switch."""

__version__ = "0.1.0"
