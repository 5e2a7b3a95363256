"""Spin-lattice relaxation toolkit for resonator-coupled rare-earth spin ensembles."""

from .kernels import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
