"""Explicit passage laws of stable, Lamperti-stable and hypergeometric
Levy processes, with quadrature oracles and Monte Carlo verification."""

__version__ = "0.1.0"
