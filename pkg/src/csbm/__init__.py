"""Correlated stochastic block models: generation, exact graph matching,
community recovery, threshold analysis and Monte Carlo sweeps."""

__version__ = "0.1.0"
