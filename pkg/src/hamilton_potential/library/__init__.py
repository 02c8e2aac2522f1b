"""Builtin statistical manifolds and parametric densities."""
