"""Bilinear equations, Fredholm determinants and simulators for one-point laws of integrable KPZ models."""

__version__ = "0.1.0"
