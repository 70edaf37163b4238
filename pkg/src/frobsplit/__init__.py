"""Frobenius-splitting criteria and intersection-lattice certificates."""

__version__ = "0.1.0"
