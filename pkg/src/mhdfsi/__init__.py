"""Penalized hybrid simulator of insulating rigid bodies in a conducting compressible fluid."""

__version__ = "0.1.0"
