"""Spin-1 Bose gases: mean-field dynamics, an exact few-body oracle and condensate-depletion bounds."""

__version__ = "0.1.0"
