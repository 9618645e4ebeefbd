"""Numerical laboratory for overlapping qubits.

Dense-matrix tooling for families of anti-commuting reflection pairs with
controlled pairwise commutator norms: random packings, separation into
exactly independent qubits, and state-dependent independence-testing
protocols evaluated exactly and by sampling.
"""

__version__ = "0.1.0"

from .errors import (
    ConsistencyError,
    DimensionMismatchError,
    DivergenceError,
    InvalidInputError,
    MemoryBudgetError,
    NumericError,
    StructuralError,
)

__all__ = [
    "__version__",
    "ConsistencyError",
    "DimensionMismatchError",
    "DivergenceError",
    "InvalidInputError",
    "MemoryBudgetError",
    "NumericError",
    "StructuralError",
]
