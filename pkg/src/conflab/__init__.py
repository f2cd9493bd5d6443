"""Confinement-induced phase shifts of matter waves."""
__version__ = "0.1.0"
