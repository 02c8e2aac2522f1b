"""Hamilton principal functions as potentials of statistical manifolds."""

__version__ = "0.1.0"
