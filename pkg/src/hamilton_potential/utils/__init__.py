"""Finite differences, quadrature and plain-data output helpers."""
