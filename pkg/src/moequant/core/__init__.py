"""Numerical core: quadrature, builders, densities, error formulas and learning."""
