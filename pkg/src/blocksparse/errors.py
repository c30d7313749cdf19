"""Exception types shared across the toolkit.

The CLI maps these onto its exit-code contract: input errors exit with 1,
convergence failures with 2, and I/O errors (plain ``OSError``) with 3.
"""


class InputError(ValueError):
    """Invalid argument, malformed file, or violated precondition."""


class ConvergenceFailure(RuntimeError):
    """A solver exhausted its iteration budget without meeting tolerances."""


class InfeasibleProblemError(InputError):
    """An equality-constrained program has no feasible point."""
