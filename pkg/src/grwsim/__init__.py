"""Spontaneous-collapse (GRW) dynamics: the two-level competing-dynamics toy
model, its quantum-jump unraveling, 1-D grid localization, and CGS regime
estimates, with a reproducible scenario harness."""

__version__ = "0.1.0"
