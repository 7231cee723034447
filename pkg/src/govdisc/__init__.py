"""Sparse discovery of thermal governing equations from process logs."""

__version__ = "0.1.0"
