"""Exact-rational construction and verification of metric germs with
prescribed parallel endomorphism fields."""

__version__ = "0.1.0"

__all__ = [
    "trunc_ring",
    "nilmodule",
    "normal_forms",
    "algebra_lab",
    "nilocalc",
    "metric_forge",
    "geoverify",
    "cli",
]
