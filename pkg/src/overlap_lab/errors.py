"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """Input violates a precondition (non-finite entries, bad norm, bad range)."""


class DimensionMismatchError(InvalidInputError):
    """Operands live on different spaces."""


class StructuralError(RuntimeError):
    """An object fails a structural requirement (e.g. cannot be a qubit)."""


class NumericError(RuntimeError):
    """A numerical routine failed to reach its advertised accuracy."""


class ConsistencyError(RuntimeError):
    """Two independent evaluation paths disagree beyond tolerance."""


class DivergenceError(RuntimeError):
    """An iterative separation step left its provable regime."""

    def __init__(self, step: int, distance: float):
        self.step = step
        self.distance = distance
        super().__init__(
            f"rounding distance {distance:.3g} >= 1/2 at step {step}; "
            "inputs are outside the convergent regime"
        )


class MemoryBudgetError(RuntimeError):
    """The requested construction exceeds the hard memory budget."""
