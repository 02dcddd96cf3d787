"""Numerical toolkit for the isoperimetric profile in the Heisenberg group H^n."""

__version__ = "0.1.0"
