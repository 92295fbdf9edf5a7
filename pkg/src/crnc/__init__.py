"""Compile logic circuits to chemical reaction networks, simulate them and check robustness."""

__version__ = "0.1.0"
