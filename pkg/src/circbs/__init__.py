"""Circulant boson sampling: ensembles, permanents, spectra and collision statistics."""

__version__ = "0.1.0"
