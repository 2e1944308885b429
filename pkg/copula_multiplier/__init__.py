"""Dependent multiplier bootstrap for the sequential empirical copula process."""
