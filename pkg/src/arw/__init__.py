"""Activated random walks in the site-wise instruction representation."""

__version__ = "0.1.0"
