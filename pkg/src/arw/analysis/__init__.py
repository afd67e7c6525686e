"""Exact enumeration and Monte Carlo analysis of bounded events."""
