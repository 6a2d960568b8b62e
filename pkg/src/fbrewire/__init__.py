"""Multirate filterbank rewiring toolkit."""

__version__ = "0.1.0"
