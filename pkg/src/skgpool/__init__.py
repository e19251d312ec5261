"""
scikit-gpool.

A Scikit Learn compatible graph classifier with geometric, sort and mixed global pooling.
"""

from .gpool import GPOOL

__version__ = "1.0.0"
