"""Numerics for Hankel forms on generalized Fock-Sobolev spaces."""

__version__ = "0.1.0"
