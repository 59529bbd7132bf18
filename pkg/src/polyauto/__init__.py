"""Numerical experiments on regular polynomial automorphisms of C^n."""

__version__ = "0.1.0"

from .maps import (  # noqa: E402
    MapError,
    MapSpec,
    build_fornaess_wu,
    build_henon_composition,
    build_shift_like,
    eval_forward,
    eval_inverse,
    henon,
    iterate,
    jacobian,
)

__all__ = [
    "MapError",
    "MapSpec",
    "build_fornaess_wu",
    "build_henon_composition",
    "build_shift_like",
    "eval_forward",
    "eval_inverse",
    "henon",
    "iterate",
    "jacobian",
]
