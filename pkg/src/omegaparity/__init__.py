"""Summatory functions of (-1)^omega(n), lambda(n) and mu(n): sieving,
density brackets, residues at zeta zeros and oscillation certificates."""

__version__ = "0.1.0"
