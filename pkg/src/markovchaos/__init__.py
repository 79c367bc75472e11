"""Exact spectral calculus of Markov diffusion generators and fourth-moment criteria."""

__version__ = "0.1.0"
