"""Exception types shared across the package."""


class DataError(ValueError):
    """Input data violates a precondition (shape, domain, schema)."""


class NumericalError(RuntimeError):
    """A numerical routine failed (non-convergence, divergence, factorization)."""
