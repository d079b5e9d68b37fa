"""Parabolic weight combinatorics, model harmonic metrics, and a
Hermitian-Einstein heat-flow solver for filtered lambda-flat bundles."""

from . import errors, fields_io, filtered, grids, he_solver, lambda_ops, models, schema, weights

__version__ = "0.1.0"

__all__ = [
    "errors",
    "fields_io",
    "filtered",
    "grids",
    "he_solver",
    "lambda_ops",
    "models",
    "schema",
    "weights",
    "__version__",
]
