"""Optomechanical self- and cross-Kerr toolkit: symbolic averaging, truncated
Fock-space dynamics, semiclassical steady states and cat-state analytics."""

__version__ = "0.1.0"
