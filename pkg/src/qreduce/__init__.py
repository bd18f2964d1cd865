"""Stochastic state reduction in a two-state system coupled to one field mode."""
__version__ = "0.1.0"
