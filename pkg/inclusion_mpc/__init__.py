"""Inclusion MPC - control of unknown systems from a single trajectory."""

__version__ = "1.0.0"
__all__ = ["__version__"]
