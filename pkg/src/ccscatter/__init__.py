"""Scattering on conformally compact spaces with variable curvature at infinity."""
__version__ = "0.1.0"
