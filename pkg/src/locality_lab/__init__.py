"""Numerical workbench for locality properties of finite quantum spin lattices."""
__version__ = "0.1.0"
